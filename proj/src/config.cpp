#include "sideband/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sideband/cooling.hpp"
#include "sideband/diagnostics.hpp"
#include "sideband/io.hpp"
#include "sideband/units.hpp"

namespace sideband {

using nlohmann::json;

namespace {

std::string num(double v) {
    std::ostringstream o;
    o << std::setprecision(10) << v;
    return o.str();
}

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw InputError("config field '" + path + "': " + what);
}

std::string type_name(const json& v) { return v.type_name(); }

void decode(const json& v, const std::string& path, double& out) {
    if (!v.is_number()) schema_error(path, "expected number, got " + type_name(v));
    out = v.get<double>();
    if (!std::isfinite(out)) schema_error(path, "must be finite");
}

void decode(const json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) schema_error(path, "expected boolean, got " + type_name(v));
    out = v.get<bool>();
}

void decode(const json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) schema_error(path, "expected string, got " + type_name(v));
    out = v.get<std::string>();
}

void decode(const json& v, const std::string& path, int& out) {
    if (!v.is_number_integer()) schema_error(path, "expected integer, got " + type_name(v));
    out = v.get<int>();
}

void decode(const json& v, const std::string& path, std::uint64_t& out) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        schema_error(path, "expected non-negative integer, got " + (v.is_number() ? v.dump() : type_name(v)));
    out = v.get<std::uint64_t>();
}

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size_t fields decode as uint64");

template <typename T>
void decode(const json& v, const std::string& path, std::optional<T>& out) {
    if (v.is_null()) {
        out.reset();
        return;
    }
    T t{};
    decode(v, path, t);
    out = t;
}

void decode(const json& v, const std::string& path, std::vector<double>& out) {
    if (!v.is_array()) schema_error(path, "expected array, got " + type_name(v));
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
        double d = 0;
        decode(v[i], path + "[" + std::to_string(i) + "]", d);
        out.push_back(d);
    }
}

void decode(const json& v, const std::string& path, std::vector<std::array<double, 2>>& out) {
    if (!v.is_array()) schema_error(path, "expected array of [lo, hi] pairs, got " + type_name(v));
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        if (!v[i].is_array() || v[i].size() != 2) schema_error(p, "expected [lo, hi]");
        std::array<double, 2> a{};
        decode(v[i][0], p + "[0]", a[0]);
        decode(v[i][1], p + "[1]", a[1]);
        out.push_back(a);
    }
}

// Reads the listed keys of one object onto defaults, then rejects anything it did not read.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) schema_error(path_.empty() ? "<root>" : path_, "expected object, got " + type_name(j_));
    }

    template <typename T>
    Section& operator()(const char* key, T& out) {
        known_.emplace_back(key);
        if (auto it = j_.find(key); it != j_.end()) decode(*it, child(key), out);
        return *this;
    }

    template <typename F>
    Section& object(const char* key, F&& reader) {
        known_.emplace_back(key);
        if (auto it = j_.find(key); it != j_.end()) reader(Section(*it, child(key)));
        return *this;
    }

    Section& key(const char* key) {
        known_.emplace_back(key);
        return *this;
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    const json& raw() const { return j_; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (std::find(known_.begin(), known_.end(), it.key()) == known_.end())
                schema_error(child(it.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::vector<std::string> known_;
};

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

void read_beam(Section s, BeamConfig& b) {
    s("kappa_hz", b.kappa_hz)("detuning_hz", b.detuning_hz)("port_couplings_hz", b.port_couplings_hz)(
        "kappa1_fraction", b.kappa1_fraction)("g_hz", b.g_hz)("gamma_opt_hz", b.gamma_opt_hz)("g0_hz", b.g0_hz)(
        "photons", b.photons)
        .finish();
}

json beam_json(const BeamConfig& b) {
    return {{"kappa_hz", b.kappa_hz},         {"detuning_hz", opt(b.detuning_hz)},
            {"port_couplings_hz", b.port_couplings_hz}, {"kappa1_fraction", b.kappa1_fraction},
            {"g_hz", opt(b.g_hz)},            {"gamma_opt_hz", opt(b.gamma_opt_hz)},
            {"g0_hz", opt(b.g0_hz)},          {"photons", opt(b.photons)}};
}

void read_chain(Section s, ChainConfig& c) {
    s("theta_rad", c.theta_rad)("eta", c.eta)("lo_amplitude", c.lo_amplitude)(
        "bs_reflectivity", c.bs_reflectivity)("tin_cancelled", c.tin_cancelled)
        .finish();
}

json chain_json(const ChainConfig& c) {
    return {{"theta_rad", c.theta_rad},
            {"eta", c.eta},
            {"lo_amplitude", c.lo_amplitude},
            {"bs_reflectivity", c.bs_reflectivity},
            {"tin_cancelled", c.tin_cancelled}};
}

void require(bool ok, const std::string& field, const std::string& constraint) {
    if (!ok) throw InputError("config field '" + field + "': " + constraint);
}

void validate_beam(const BeamConfig& b, const std::string& p) {
    require(b.kappa_hz > 0, p + ".kappa_hz", "must be > 0, got " + num(b.kappa_hz));
    require(b.kappa1_fraction >= 0 && b.kappa1_fraction <= 1, p + ".kappa1_fraction",
            "must lie in [0, 1], got " + num(b.kappa1_fraction));
    double sum = 0;
    for (double k : b.port_couplings_hz) {
        require(k >= 0, p + ".port_couplings_hz", "entries must be >= 0, got " + num(k));
        sum += k;
    }
    if (!b.port_couplings_hz.empty())
        require(sum <= b.kappa_hz * (1 + 1e-12), p + ".port_couplings_hz",
                "port-coupling invariant sum(kappa_i) <= kappa violated: sum(kappa_i) = " + num(sum) +
                    " Hz > kappa = " + num(b.kappa_hz) + " Hz");
    if (b.g_hz) require(*b.g_hz >= 0, p + ".g_hz", "must be >= 0, got " + num(*b.g_hz));
    if (b.gamma_opt_hz) require(*b.gamma_opt_hz >= 0, p + ".gamma_opt_hz", "must be >= 0, got " + num(*b.gamma_opt_hz));
    if (!b.g_hz && !b.gamma_opt_hz)
        require(b.g0_hz && b.photons, p, "needs g_hz, gamma_opt_hz, or both g0_hz and photons");
    if (b.photons) require(*b.photons >= 0, p + ".photons", "must be >= 0, got " + num(*b.photons));
}

OpticalMode make_beam(const BeamConfig& b, double g, const std::string& label) {
    const double kappa = hz_to_rad(b.kappa_hz);
    const double detuning = b.detuning_hz ? hz_to_rad(*b.detuning_hz) : magic_detuning(kappa, -1);
    std::vector<double> ports;
    if (b.port_couplings_hz.empty())
        ports.push_back(b.kappa1_fraction * kappa);
    else
        for (double k : b.port_couplings_hz) ports.push_back(hz_to_rad(k));
    return OpticalMode(kappa, detuning, ports, g, label);
}

Window window_from(const std::string& s) {
    if (s == "hann") return Window::hann;
    if (s == "rectangular") return Window::rectangular;
    throw InputError("config field 'analysis.window': expected \"hann\" or \"rectangular\", got \"" + s + "\"");
}

}  // namespace

json to_json(const ExperimentConfig& c) {
    const auto& m = c.system.mechanics;
    const auto& h = c.system.heating;
    const auto& e = c.system.ensemble;
    const auto& s = c.synthesis;
    const auto& a = c.analysis;
    const auto& t = a.tin;
    json masks = json::array();
    for (const auto& mk : a.masks_hz) masks.push_back({mk[0], mk[1]});
    return {
        {"system",
         {{"mechanics",
           {{"frequency_hz", m.frequency_hz},
            {"quality_factor", m.quality_factor},
            {"bath_temperature_k", m.bath_temperature_k},
            {"n_th", opt(m.n_th)},
            {"target_n_eff", opt(m.target_n_eff)},
            {"soft_clamped", m.soft_clamped}}},
          {"cooling", beam_json(c.system.cooling)},
          {"probe", beam_json(c.system.probe)},
          {"heating",
           {{"tin_ratio", h.tin_ratio},
            {"domega_dt_hz_per_k", h.domega_dt_hz_per_k},
            {"dt_dpower_k_per_hz2", h.dt_dpower_k_per_hz2}}},
          {"ensemble",
           {{"count", e.count},
            {"lo_hz", e.lo_hz},
            {"hi_hz", e.hi_hz},
            {"gap_lo_hz", e.gap_lo_hz},
            {"gap_hi_hz", e.gap_hi_hz},
            {"linewidth_hz", e.linewidth_hz},
            {"temperature_k", e.temperature_k},
            {"rms_detuning_hz", e.rms_detuning_hz}}},
          {"upstream_efficiency", c.system.upstream_efficiency}}},
        {"detection",
         {{"chains", {chain_json(c.detection.chains[0]), chain_json(c.detection.chains[1])}},
          {"cooling_eta", c.detection.cooling_eta},
          {"cooling_theta_rad", c.detection.cooling_theta_rad},
          {"tin_phase_rad", c.detection.tin_phase_rad}}},
        {"synthesis",
         {{"fs_hz", s.fs_hz},
          {"n_samples", s.n_samples},
          {"seed", opt(s.seed)},
          {"gain_ratio", s.gain_ratio},
          {"delay_samples", s.delay_samples},
          {"tin_order", s.tin_order},
          {"tin_band_hz", s.tin_band_hz},
          {"cooling_stream", s.cooling_stream},
          {"calibration_pair", s.calibration_pair}}},
        {"analysis",
         {{"segment_length", a.segment_length},
          {"overlap", a.overlap},
          {"window", a.window},
          {"fit_half_width", a.fit_half_width},
          {"masks_hz", masks},
          {"tone_half_width_hz", a.tone_half_width_hz},
          {"spectrum_span_hz", a.spectrum_span_hz},
          {"spectrum_points", a.spectrum_points},
          {"fit_window_hz", a.fit_window_hz},
          {"input", opt(a.input)},
          {"tin",
           {{"band_limit_hz", t.band_limit_hz},
            {"half_points", t.half_points},
            {"band_lo_hz", t.band_lo_hz},
            {"band_hi_hz", t.band_hi_hz},
            {"sweep_min", t.sweep_min},
            {"sweep_max", t.sweep_max},
            {"sweep_step", t.sweep_step},
            {"intracavity_photons", t.intracavity_photons},
            {"method", t.method}}}}},
    };
}

ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    Section root(j, "");
    root.object("system", [&](Section s) {
        auto& sys = c.system;
        s.object("mechanics", [&](Section m) {
             auto& x = sys.mechanics;
             m("frequency_hz", x.frequency_hz)("quality_factor", x.quality_factor)(
                 "bath_temperature_k", x.bath_temperature_k)("n_th", x.n_th)("target_n_eff", x.target_n_eff)(
                 "soft_clamped", x.soft_clamped)
                 .finish();
         })
            .object("cooling", [&](Section b) { read_beam(b, sys.cooling); })
            .object("probe", [&](Section b) { read_beam(b, sys.probe); })
            .object("heating", [&](Section hh) {
                auto& x = sys.heating;
                hh("tin_ratio", x.tin_ratio)("domega_dt_hz_per_k", x.domega_dt_hz_per_k)(
                    "dt_dpower_k_per_hz2", x.dt_dpower_k_per_hz2)
                    .finish();
            })
            .object("ensemble", [&](Section ee) {
                auto& x = sys.ensemble;
                ee("count", x.count)("lo_hz", x.lo_hz)("hi_hz", x.hi_hz)("gap_lo_hz", x.gap_lo_hz)(
                    "gap_hi_hz", x.gap_hi_hz)("linewidth_hz", x.linewidth_hz)("temperature_k", x.temperature_k)(
                    "rms_detuning_hz", x.rms_detuning_hz)
                    .finish();
            })("upstream_efficiency", sys.upstream_efficiency)
            .finish();
    });
    root.object("detection", [&](Section d) {
        auto& x = c.detection;
        d("cooling_eta", x.cooling_eta)("cooling_theta_rad", x.cooling_theta_rad)("tin_phase_rad", x.tin_phase_rad);
        d.key("chains");
        if (auto it = d.raw().find("chains"); it != d.raw().end()) {
            const std::string p = d.child("chains");
            if (!it->is_array() || it->size() != 2) schema_error(p, "expected an array of exactly 2 chains");
            for (std::size_t i = 0; i < 2; ++i) read_chain(Section((*it)[i], p + "[" + std::to_string(i) + "]"), x.chains[i]);
        }
        d.finish();
    });
    root.object("synthesis", [&](Section s) {
        auto& x = c.synthesis;
        s("fs_hz", x.fs_hz)("n_samples", x.n_samples)("seed", x.seed)("gain_ratio", x.gain_ratio)(
            "delay_samples", x.delay_samples)("tin_order", x.tin_order)("tin_band_hz", x.tin_band_hz)(
            "cooling_stream", x.cooling_stream)("calibration_pair", x.calibration_pair)
            .finish();
    });
    root.object("analysis", [&](Section s) {
        auto& x = c.analysis;
        s("segment_length", x.segment_length)("overlap", x.overlap)("window", x.window)(
            "fit_half_width", x.fit_half_width)("masks_hz", x.masks_hz)("tone_half_width_hz", x.tone_half_width_hz)(
            "spectrum_span_hz", x.spectrum_span_hz)("spectrum_points", x.spectrum_points)(
            "fit_window_hz", x.fit_window_hz)("input", x.input)
            .object("tin", [&](Section t) {
                auto& y = x.tin;
                t("band_limit_hz", y.band_limit_hz)("half_points", y.half_points)("band_lo_hz", y.band_lo_hz)(
                    "band_hi_hz", y.band_hi_hz)("sweep_min", y.sweep_min)("sweep_max", y.sweep_max)(
                    "sweep_step", y.sweep_step)("intracavity_photons", y.intracavity_photons)("method", y.method)
                    .finish();
            })
            .finish();
    });
    root.finish();
    return c;
}

void validate(const ExperimentConfig& c) {
    const auto& m = c.system.mechanics;
    require(m.frequency_hz > 0, "system.mechanics.frequency_hz", "must be > 0, got " + num(m.frequency_hz));
    require(m.quality_factor > 0, "system.mechanics.quality_factor", "must be > 0, got " + num(m.quality_factor));
    require(m.bath_temperature_k > 0, "system.mechanics.bath_temperature_k",
            "must be > 0, got " + num(m.bath_temperature_k));
    if (m.n_th) require(*m.n_th >= 0, "system.mechanics.n_th", "must be >= 0, got " + num(*m.n_th));
    if (m.target_n_eff)
        require(*m.target_n_eff > 0, "system.mechanics.target_n_eff", "must be > 0, got " + num(*m.target_n_eff));
    validate_beam(c.system.cooling, "system.cooling");
    validate_beam(c.system.probe, "system.probe");
    const auto& h = c.system.heating;
    require(h.tin_ratio >= 0, "system.heating.tin_ratio", "must be >= 0, got " + num(h.tin_ratio));
    require(h.domega_dt_hz_per_k >= 0, "system.heating.domega_dt_hz_per_k", "must be >= 0");
    require(h.dt_dpower_k_per_hz2 >= 0, "system.heating.dt_dpower_k_per_hz2", "must be >= 0");
    const auto& e = c.system.ensemble;
    if (e.count > 0) {
        require(e.hi_hz > e.lo_hz, "system.ensemble.hi_hz",
                "must exceed lo_hz: hi_hz = " + num(e.hi_hz) + ", lo_hz = " + num(e.lo_hz));
        require(e.gap_hi_hz >= e.gap_lo_hz, "system.ensemble.gap_hi_hz",
                "must be >= gap_lo_hz: gap_hi_hz = " + num(e.gap_hi_hz) + ", gap_lo_hz = " + num(e.gap_lo_hz));
        require(e.linewidth_hz > 0, "system.ensemble.linewidth_hz", "must be > 0, got " + num(e.linewidth_hz));
        require(e.temperature_k > 0, "system.ensemble.temperature_k", "must be > 0");
        require(e.rms_detuning_hz >= 0, "system.ensemble.rms_detuning_hz", "must be >= 0");
    }
    require(c.system.upstream_efficiency >= 0 && c.system.upstream_efficiency <= 1, "system.upstream_efficiency",
            "must lie in [0, 1], got " + num(c.system.upstream_efficiency));

    for (std::size_t i = 0; i < 2; ++i) {
        const auto& ch = c.detection.chains[i];
        const std::string p = "detection.chains[" + std::to_string(i) + "]";
        require(ch.eta >= 0 && ch.eta <= 1, p + ".eta", "must lie in [0, 1], got " + num(ch.eta));
        require(ch.bs_reflectivity >= 0 && ch.bs_reflectivity < 0.5, p + ".bs_reflectivity",
                "must lie in [0, 0.5), got " + num(ch.bs_reflectivity));
        require(ch.lo_amplitude >= 0, p + ".lo_amplitude", "must be >= 0, got " + num(ch.lo_amplitude));
    }
    require(c.detection.cooling_eta >= 0 && c.detection.cooling_eta <= 1, "detection.cooling_eta",
            "must lie in [0, 1], got " + num(c.detection.cooling_eta));

    const auto& s = c.synthesis;
    require(s.fs_hz > 0, "synthesis.fs_hz", "must be > 0, got " + num(s.fs_hz));
    require(s.n_samples >= 2, "synthesis.n_samples", "must be >= 2, got " + std::to_string(s.n_samples));
    require(s.gain_ratio > 0, "synthesis.gain_ratio", "must be > 0, got " + num(s.gain_ratio));
    require(s.tin_order >= 2 && s.tin_order <= 3, "synthesis.tin_order",
            "must be 2 or 3, got " + std::to_string(s.tin_order));
    require(s.tin_band_hz.empty() || (s.tin_band_hz.size() == 2 && s.tin_band_hz[1] > s.tin_band_hz[0]),
            "synthesis.tin_band_hz", "must be empty or [lo, hi] with hi > lo");
    if (e.count > 0)
        require(s.fs_hz > 2 * e.hi_hz, "synthesis.fs_hz",
                "must exceed twice system.ensemble.hi_hz: fs_hz = " + num(s.fs_hz) + ", hi_hz = " + num(e.hi_hz));

    const auto& a = c.analysis;
    require(a.segment_length >= 16, "analysis.segment_length", "must be >= 16, got " + std::to_string(a.segment_length));
    require(a.segment_length <= s.n_samples, "analysis.segment_length",
            "must not exceed synthesis.n_samples: segment_length = " + std::to_string(a.segment_length) +
                ", n_samples = " + std::to_string(s.n_samples));
    require(a.overlap >= 0 && a.overlap < 1, "analysis.overlap", "must lie in [0, 1), got " + num(a.overlap));
    window_from(a.window);
    require(a.fit_half_width > 0, "analysis.fit_half_width", "must be > 0, got " + num(a.fit_half_width));
    for (std::size_t i = 0; i < a.masks_hz.size(); ++i)
        require(a.masks_hz[i][1] > a.masks_hz[i][0], "analysis.masks_hz[" + std::to_string(i) + "]",
                "needs hi > lo, got [" + num(a.masks_hz[i][0]) + ", " + num(a.masks_hz[i][1]) + "]");
    require(a.tone_half_width_hz > 0, "analysis.tone_half_width_hz", "must be > 0");
    require(a.spectrum_span_hz > 0, "analysis.spectrum_span_hz", "must be > 0");
    require(a.spectrum_points >= 2, "analysis.spectrum_points", "must be >= 2");
    require(a.fit_window_hz.empty() || (a.fit_window_hz.size() == 2 && a.fit_window_hz[1] > a.fit_window_hz[0]),
            "analysis.fit_window_hz", "must be empty or [lo, hi] with hi > lo");
    if (a.input)
        require(std::filesystem::exists(*a.input), "analysis.input", "referenced path does not exist: " + *a.input);
    const auto& t = a.tin;
    require(t.band_limit_hz > 0, "analysis.tin.band_limit_hz", "must be > 0");
    require(t.half_points >= 2, "analysis.tin.half_points", "must be >= 2");
    require(t.band_hi_hz > t.band_lo_hz && t.band_lo_hz >= 0, "analysis.tin.band_hi_hz",
            "needs 0 <= band_lo_hz < band_hi_hz, got band_lo_hz = " + num(t.band_lo_hz) +
                ", band_hi_hz = " + num(t.band_hi_hz));
    require(t.sweep_min > 0 && t.sweep_max > t.sweep_min, "analysis.tin.sweep_max",
            "needs 0 < sweep_min < sweep_max, got sweep_min = " + num(t.sweep_min) + ", sweep_max = " +
                num(t.sweep_max));
    require(t.sweep_step > 0, "analysis.tin.sweep_step", "must be > 0, got " + num(t.sweep_step));
    require(t.intracavity_photons >= 0, "analysis.tin.intracavity_photons", "must be >= 0");
    require(t.method == "fft" || t.method == "direct", "analysis.tin.method",
            "expected \"fft\" or \"direct\", got \"" + t.method + "\"");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    auto c = from_json(j);
    validate(c);
    return c;
}

void save_config(const ExperimentConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write config file " + path.string());
    out << to_json(c).dump(2) << '\n';
}

std::string canonical_json(const ExperimentConfig& c) { return to_json(c).dump(); }

std::string config_hash(const ExperimentConfig& c) { return sha256_hex(canonical_json(c)); }

ResolvedSystem resolve_system(const ExperimentConfig& c) {
    validate(c);
    const auto& mc = c.system.mechanics;
    const double omega_m = hz_to_rad(mc.frequency_hz);
    const double n_bath = mc.n_th ? *mc.n_th : thermal_occupancy(mc.bath_temperature_k, omega_m);
    MechanicalMode mode(omega_m, omega_m / mc.quality_factor, n_bath, mc.soft_clamped);

    auto explicit_g = [](const BeamConfig& b) -> std::optional<double> {
        if (b.g_hz) return hz_to_rad(*b.g_hz);
        if (!b.gamma_opt_hz) return hz_to_rad(*b.g0_hz) * std::sqrt(*b.photons);
        return std::nullopt;
    };
    const auto& bc = c.system.cooling;
    const auto& bp = c.system.probe;
    const OpticalMode probe_draft = make_beam(bp, explicit_g(bp).value_or(0.0), "probe");
    OpticalMode cooling = make_beam(bc, explicit_g(bc).value_or(0.0), "cooling");
    if (!explicit_g(bc)) {
        const OpticalMode others[] = {probe_draft};
        cooling = cooling.with_g(coupling_for_damping(mode, cooling, hz_to_rad(*bc.gamma_opt_hz), true, others));
    }
    OpticalMode probe = probe_draft;
    if (!explicit_g(bp)) {
        const OpticalMode others[] = {cooling};
        probe = probe.with_g(coupling_for_damping(mode, probe, hz_to_rad(*bp.gamma_opt_hz), true, others));
    }

    const auto& hc = c.system.heating;
    const AbsorptionCoefficients coeffs{hz_to_rad(hc.domega_dt_hz_per_k),
                                        hc.dt_dpower_k_per_hz2 / (two_pi * two_pi)};
    HeatingBudget heating = absorption_model(cooling.g() * cooling.g(), coeffs, mc.bath_temperature_k, n_bath);
    const double bath_scale = heating.n_th_effective / std::max(n_bath, 1e-300);
    heating.tin_force_psd = tin_force_psd_from_ratio(hc.tin_ratio, cooling);

    const BackactionReport reports[] = {backaction(mode, cooling), backaction(mode, probe)};
    if (mc.target_n_eff && !mc.n_th) {
        HeatingBudget zero = heating;
        zero.n_th_effective = 0;
        const auto base = effective_occupancy(reports, mode, zero);
        if (base.anti_damped) throw InputError("system: the configured beams anti-damp the mechanical mode");
        const double n_eff_th = (*mc.target_n_eff - base.n_eff) * base.gamma_total / mode.gamma();
        if (!(n_eff_th >= 0))
            throw InputError("config field 'system.mechanics.target_n_eff': " + num(*mc.target_n_eff) +
                             " is below the backaction and TIN floor " + num(base.n_eff));
        heating.n_th_effective = n_eff_th;
        mode = mode.with_n_th(bath_scale > 0 ? n_eff_th / bath_scale : n_eff_th);
    }

    ResolvedSystem r{OpticalSystem{mode, cooling, probe, heating, 0.0, {}, 0.0, c.system.upstream_efficiency}};
    r.system.probe_photons = bp.photons ? *bp.photons : 0.0;
    const auto occ = effective_occupancy(reports, mode, heating);
    if (occ.anti_damped) throw InputError("system: the configured beams anti-damp the mechanical mode");
    r.n_eff = occ.n_eff;
    const OpticalMode beams[] = {cooling, probe};
    r.omega_shifted = shifted_frequency(mode, beams);
    r.gamma_opt_total = gamma_opt(r.omega_shifted, mode, beams);
    r.cooling_photons = bc.g0_hz && *bc.g0_hz > 0 ? std::pow(cooling.g() / hz_to_rad(*bc.g0_hz), 2) : 0.0;
    r.tin_ratio = hc.tin_ratio;
    const auto ens = make_ensemble(c);
    r.system.probe_frequency_noise = [ens](double w) { return ens.psd(w); };
    return r;
}

NoiseEnsemble make_ensemble(const ExperimentConfig& c) {
    const auto& e = c.system.ensemble;
    EnsembleOptions o;
    o.count = e.count;
    o.omega_lo = hz_to_rad(e.lo_hz);
    o.omega_hi = hz_to_rad(e.hi_hz);
    o.gap_lo = hz_to_rad(e.gap_lo_hz);
    o.gap_hi = hz_to_rad(e.gap_hi_hz);
    o.linewidth = hz_to_rad(e.linewidth_hz);
    o.temperature = e.temperature_k;
    o.rms_detuning = hz_to_rad(e.rms_detuning_hz);
    o.seed = c.synthesis.seed.value_or(0);
    return default_ensemble(o);
}

std::array<DetectionChain, 2> make_chains(const ExperimentConfig& c) {
    std::array<DetectionChain, 2> out;
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& x = c.detection.chains[i];
        out[i] = DetectionChain{x.theta_rad, x.eta, x.lo_amplitude, x.bs_reflectivity, x.tin_cancelled};
    }
    return out;
}

WelchOptions make_welch(const ExperimentConfig& c) {
    return {c.analysis.segment_length, c.analysis.overlap, window_from(c.analysis.window)};
}

SynthesisSetup make_synthesis(const ExperimentConfig& c, const ResolvedSystem& r) {
    const auto& s = c.synthesis;
    if (!s.seed) throw InputError("config field 'synthesis.seed': required when synthesis is requested");
    SynthesisSetup out{.system = r.system, .ensemble = make_ensemble(c), .chains = make_chains(c)};
    out.fs = s.fs_hz;
    out.n_samples = s.n_samples;
    out.seed = *s.seed;
    out.tin_order = s.tin_order;
    if (s.tin_band_hz.size() == 2) {
        out.tin_band_lo = hz_to_rad(s.tin_band_hz[0]);
        out.tin_band_hi = hz_to_rad(s.tin_band_hz[1]);
    }
    out.gain_ratio = s.gain_ratio;
    out.delay = s.delay_samples / s.fs_hz;
    out.cooling_stream = s.cooling_stream;
    out.cooling_eta = c.detection.cooling_eta;
    out.cooling_theta = c.detection.cooling_theta_rad;
    out.tin_phase = c.detection.tin_phase_rad;
    out.calibration_pair = s.calibration_pair;
    return out;
}

}  // namespace sideband
