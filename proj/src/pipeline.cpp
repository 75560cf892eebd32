#include "sideband/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "sideband/cooling.hpp"
#include "sideband/synthesis.hpp"
#include "sideband/tin.hpp"
#include "sideband/units.hpp"

namespace sideband {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"spectrum", "cool",      "tin", "synth", "dualhomodyne",
                                                "fit",      "calibrate", "thermometry"};
    return names;
}

Command parse_command(const std::string& name) {
    const auto& n = command_names();
    const auto it = std::find(n.begin(), n.end(), name);
    if (it == n.end()) {
        std::string list;
        for (const auto& s : n) list += (list.empty() ? "" : "|") + s;
        throw UsageError("unknown command '" + name + "'; expected one of " + list);
    }
    return static_cast<Command>(it - n.begin());
}

std::string to_string(Command c) { return command_names().at(static_cast<std::size_t>(c)); }

OutputFormat parse_format(const std::string& name) {
    if (name == "csv") return OutputFormat::csv;
    if (name == "json") return OutputFormat::json;
    throw UsageError("unknown format '" + name + "'; expected csv or json");
}

std::vector<Interval> tone_bands(const NoiseEnsemble& ensemble, double half_width) {
    std::vector<Interval> bands;
    for (const auto& m : ensemble.modes) bands.push_back({m.mode.omega_m() - half_width, m.mode.omega_m() + half_width});
    return bands;
}

namespace {

struct Reconstructed {
    std::optional<CalibrationResult> calibration;
    Reconstruction rec;
};

Reconstructed reconstruct(const TimeSeries& s1, const TimeSeries& s2,
                          const std::optional<std::pair<TimeSeries, TimeSeries>>& pair,
                          const std::array<DetectionChain, 2>& chains, const ThermometryOptions& o) {
    if (s1.size() != s2.size() || s1.fs != s2.fs)
        throw InputError("streams differ in length or sample rate: " + std::to_string(s1.size()) + " vs " +
                         std::to_string(s2.size()) + " samples");
    Reconstructed out;
    TimeSeries corrected = s2;
    if (pair && !o.tones.empty()) {
        out.calibration = detector_cross_calibration(pair->first, pair->second, o.tones, o.welch);
        corrected = apply_calibration(s2, *out.calibration);
    } else {
        warn("no calibration pair: stream 2 used without gain and delay correction");
    }
    const auto wp = welch_pair(s1, corrected, o.welch);
    out.rec = dual_homodyne_reconstruct(wp.p11, wp.p22, wp.p12, chains[0], chains[1]);
    return out;
}

}  // namespace

ThermometryResult analyze_thermometry(const TimeSeries& stream1, const TimeSeries& stream2,
                                      const std::optional<std::pair<TimeSeries, TimeSeries>>& calibration_pair,
                                      const std::array<DetectionChain, 2>& chains, const OpticalMode& probe,
                                      double omega_guess, const ThermometryOptions& o) {
    if (!(o.fit_half_width > 0)) throw InputError("thermometry: fit half width must be > 0");
    auto r = reconstruct(stream1, stream2, calibration_pair, chains, o);
    ThermometryResult t;
    t.calibration = r.calibration;
    t.field = std::move(r.rec.field);

    FitOptions fo;
    fo.mask = o.masks;
    t.upper = fit_lorentzian(t.field, {omega_guess - o.fit_half_width, omega_guess + o.fit_half_width}, fo);
    t.lower = fit_lorentzian(t.field, {-omega_guess - o.fit_half_width, -omega_guess + o.fit_half_width}, fo);
    t.ratio = t.upper.area / t.lower.area;
    t.ratio_err = std::abs(t.ratio) * std::hypot(t.upper.area_err() / t.upper.area, t.lower.area_err() / t.lower.area);
    t.omega_shifted = 0.5 * (std::abs(t.upper.center) + std::abs(t.lower.center));
    t.s = asymmetry_factor(t.omega_shifted, probe);
    t.occupancy = occupancy_from_asymmetry(t.ratio, t.s);
    // n = 1/(R/s − 1)
    t.n_err = t.occupancy.n * t.occupancy.n * t.ratio_err / t.s;

    SidebandOptions so;
    so.masks = o.masks;
    t.integrated = sideband_ratio(t.field, t.omega_shifted, o.fit_half_width, so);
    return t;
}

ErrorRecord error_record(std::exception_ptr error, const std::string& command, const std::string& config_hash) {
    ErrorRecord e{"internal_error", "unknown error", command, config_hash, 1};
    try {
        std::rethrow_exception(error);
    } catch (const UsageError& x) {
        e = {"usage_error", x.what(), command, config_hash, 2};
    } catch (const IllConditioned& x) {
        e = {"ill_conditioned", x.what(), command, config_hash, 4};
    } catch (const Divergence& x) {
        e = {"divergence", x.what(), command, config_hash, 5};
    } catch (const InputError& x) {
        e = {"input_error", x.what(), command, config_hash, 3};
    } catch (const std::invalid_argument& x) {
        e = {"input_error", x.what(), command, config_hash, 3};
    } catch (const nlohmann::json::exception& x) {
        e = {"input_error", x.what(), command, config_hash, 3};
    } catch (const std::exception& x) {
        e.message = x.what();
    } catch (...) {
    }
    return e;
}

namespace {

double hz(double w) { return rad_to_hz(w); }

json fit_json(const LorentzianFit& f) {
    return {{"center_hz", hz(f.center)},
            {"center_err_hz", hz(f.center_err())},
            {"fwhm_hz", hz(f.fwhm)},
            {"fwhm_err_hz", hz(f.fwhm_err())},
            {"area_quanta_hz", hz(f.area)},
            {"area_err_quanta_hz", hz(f.area_err())},
            {"background_quanta", f.background},
            {"background_err_quanta", f.background_err()},
            {"converged", f.converged},
            {"area_nonpositive", f.area_nonpositive},
            {"iterations", f.iterations},
            {"points", f.points},
            {"reduced_chi2", f.reduced_chi2}};
}

json calibration_json(const CalibrationResult& c, double fs) {
    return {{"gain_ratio", c.gain_ratio},
            {"gain_err", c.gain_err},
            {"delay_s", c.phase_delay},
            {"delay_err_s", c.delay_err},
            {"delay_samples", c.phase_delay * fs},
            {"delay_err_samples", c.delay_err * fs},
            {"phase_residual_rad", c.residual},
            {"bins_used", c.bins_used},
            {"mean_coherence", c.mean_coherence}};
}

json backaction_json(const BackactionReport& b) {
    auto finite = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"g_hz", hz(b.g)},
            {"a_plus_hz", hz(b.a_plus)},
            {"a_minus_hz", hz(b.a_minus)},
            {"gamma_opt_hz", hz(b.gamma_opt)},
            {"spring_shift_hz", hz(b.spring_shift)},
            {"n_min", finite(b.n_min)},
            {"n_min_closed_form", finite(b.n_min_closed)},
            {"n_min_printed_form", finite(b.n_min_printed)},
            {"cooperativity", b.cooperativity_q},
            {"damped", b.damped}};
}

class Outputs {
public:
    Outputs(fs::path dir, std::string hash, OutputFormat format)
        : dir_(std::move(dir)), hash_(std::move(hash)), format_(format) {
        fs::create_directories(dir_);
    }

    void report(const std::string& name, json j) {
        j["config_hash"] = hash_;
        write_json(dir_ / (name + ".json"), j);
        add(name + ".json");
    }

    void table(const std::string& name, const Table& t) {
        if (format_ == OutputFormat::csv) {
            write_csv(dir_ / (name + ".csv"), t);
            add(name + ".csv");
        } else {
            json j = table_json(t);
            j["config_hash"] = hash_;
            write_json(dir_ / (name + ".json"), j);
            add(name + ".json");
        }
    }

    void series(const std::string& name, const TimeSeries& s) {
        write_series(dir_ / name, s, "sqrt(quanta*Hz)", hash_);
        add(name + ".f64");
        add(name + ".json");
    }

    const std::vector<OutputFile>& files() const { return files_; }
    const fs::path& dir() const { return dir_; }

private:
    void add(const std::string& rel) { files_.push_back({rel, sha256_file(dir_ / rel)}); }

    fs::path dir_;
    std::string hash_;
    OutputFormat format_;
    std::vector<OutputFile> files_;
};

// Routes warnings into the manifest for the lifetime of one run and echoes them to stderr.
class WarningCapture {
public:
    explicit WarningCapture(std::vector<std::string>& into) {
        set_warning_sink([&into](const std::string& m) {
            into.push_back(m);
            std::cerr << "warning: " << m << '\n';
        });
    }
    ~WarningCapture() { set_warning_sink({}); }
    WarningCapture(const WarningCapture&) = delete;
    WarningCapture& operator=(const WarningCapture&) = delete;
};

struct Streams {
    TimeSeries s1, s2;
    std::optional<std::pair<TimeSeries, TimeSeries>> calibration;
    bool synthesized = false;
};

Streams load_streams(const ExperimentConfig& c, const ResolvedSystem& r) {
    Streams s;
    if (c.analysis.input) {
        const fs::path dir = *c.analysis.input;
        if (!fs::is_directory(dir))
            throw InputError("config field 'analysis.input': expected a directory of streams, got " + dir.string());
        s.s1 = read_series(dir / "stream1");
        s.s2 = read_series(dir / "stream2");
        if (fs::exists(dir / "calibration_1.json") && fs::exists(dir / "calibration_2.json"))
            s.calibration.emplace(read_series(dir / "calibration_1"), read_series(dir / "calibration_2"));
        return s;
    }
    auto out = synth_photocurrents(make_synthesis(c, r));
    s.s1 = std::move(out.stream1);
    s.s2 = std::move(out.stream2);
    s.calibration = std::move(out.calibration);
    s.synthesized = true;
    return s;
}

}  // namespace

ThermometryOptions thermometry_options(const ExperimentConfig& c, const ResolvedSystem& r) {
    ThermometryOptions o;
    o.welch = make_welch(c);
    o.fit_half_width = c.analysis.fit_half_width * (r.system.mode.gamma() + r.gamma_opt_total);
    for (const auto& m : c.analysis.masks_hz) o.masks.push_back({hz_to_rad(m[0]), hz_to_rad(m[1])});
    o.tones = tone_bands(make_ensemble(c), hz_to_rad(c.analysis.tone_half_width_hz));
    return o;
}

namespace {

Table field_table(const SpectrumGrid& field, const SpectrumGrid* sxx, const SpectrumGrid* syy, double omega_shifted,
                  double span) {
    Table t;
    t.columns = {"freq_hz", "field_quanta"};
    if (sxx) t.columns.insert(t.columns.end(), {"s_xx_quanta", "s_yy_quanta"});
    for (std::size_t k = 0; k < field.size(); ++k) {
        const double w = field.omega(k);
        if (std::abs(std::abs(w) - omega_shifted) > span) continue;
        std::vector<double> row{hz(w), field.values[k]};
        if (sxx) {
            row.push_back(sxx->values[k]);
            row.push_back(syy->values[k]);
        }
        t.add_row(std::move(row));
    }
    return t;
}

void run_spectrum(const ExperimentConfig& c, const ResolvedSystem& r, Outputs& out) {
    const auto& sys = r.system;
    const auto chains = make_chains(c);
    const double span = hz_to_rad(c.analysis.spectrum_span_hz);
    Table t;
    t.columns = {"freq_hz",        "s_qq_quanta",  "probe_quanta", "probe_network_quanta",
                 "cooling_quanta", "chain1_quanta", "chain2_quanta"};
    for (double centre : {-r.omega_shifted, r.omega_shifted}) {
        const auto axis = UniformAxis::span(centre - span, centre + span, c.analysis.spectrum_points);
        const auto sqq = displacement_psd(axis, sys.mode, sys.cooling, sys.probe, sys.heating);
        const auto probe = probe_output_psd(axis, sys);
        const auto net = probe_output_psd_network(axis, sys);
        const auto cool = cooling_output_psd(axis, sys, c.detection.cooling_eta, c.detection.cooling_theta_rad,
                                             c.detection.tin_phase_rad);
        const auto h1 = homodyne_psd(axis, chains[0], sys, 0);
        const auto h2 = homodyne_psd(axis, chains[1], sys, 1);
        for (std::size_t i = 0; i < axis.size; ++i)
            t.add_row({hz(axis[i]), sqq.values[i], probe.values[i], net.values[i], cool.values[i], h1.values[i],
                       h2.values[i]});
    }
    out.table("spectrum", t);
    const double s = asymmetry_factor(r.omega_shifted, sys.probe);
    out.report("spectrum_summary", {{"omega_shifted_hz", hz(r.omega_shifted)},
                                    {"gamma_m_hz", hz(sys.mode.gamma())},
                                    {"gamma_opt_total_hz", hz(r.gamma_opt_total)},
                                    {"n_eff", r.n_eff},
                                    {"asymmetry_factor_s", s},
                                    {"expected_ratio", s * (r.n_eff + 1) / r.n_eff}});
}

void run_cool(const ExperimentConfig& c, const ResolvedSystem& r, Outputs& out) {
    const auto& sys = r.system;
    const auto bc = backaction(sys.mode, sys.cooling);
    const auto bp = backaction(sys.mode, sys.probe);
    const OpticalMode beams[] = {sys.cooling, sys.probe};
    out.report("cool", {{"cooling", backaction_json(bc)},
                        {"probe", backaction_json(bp)},
                        {"omega_m_hz", hz(sys.mode.omega_m())},
                        {"gamma_m_hz", hz(sys.mode.gamma())},
                        {"n_th", sys.mode.n_th()},
                        {"n_th_effective", sys.heating.n_th_effective},
                        {"tin_ratio", c.system.heating.tin_ratio},
                        {"absorption_temp_rise_k", sys.heating.absorption_temp_rise},
                        {"absorption_freq_shift_hz", hz(sys.heating.absorption_freq_shift)},
                        {"omega_shifted_hz", hz(r.omega_shifted)},
                        {"spring_shift_total_hz", hz(spring_shift(sys.mode.omega_m(), sys.mode, beams))},
                        {"gamma_opt_total_hz", hz(r.gamma_opt_total)},
                        {"n_eff", r.n_eff},
                        {"cooling_photons", r.cooling_photons}});

    // Cooling-beam coupling scan at fixed bath and TIN ratio.
    Table t;
    t.columns = {"g_hz", "gamma_opt_hz", "n_eff", "n_min"};
    for (int i = 0; i <= 40; ++i) {
        const double g = sys.cooling.g() * i / 20.0;
        const OpticalMode cool = sys.cooling.with_g(g);
        HeatingBudget h = sys.heating;
        h.tin_force_psd = tin_force_psd_from_ratio(c.system.heating.tin_ratio, cool);
        const BackactionReport reps[] = {backaction(sys.mode, cool), bp};
        const auto occ = effective_occupancy(reps, sys.mode, h);
        t.add_row({hz(g), hz(reps[0].gamma_opt), occ.anti_damped ? NAN : occ.n_eff, reps[0].n_min});
    }
    out.table("cool_scan", t);
}

void run_tin(const ExperimentConfig& c, const ResolvedSystem& r, Outputs& out) {
    const auto& tc = c.analysis.tin;
    const OpticalMode& mode = r.system.cooling;
    const double band_limit = hz_to_rad(tc.band_limit_hz);
    const double step = band_limit / static_cast<double>(tc.half_points);
    const double lo = hz_to_rad(tc.band_lo_hz), hi = hz_to_rad(tc.band_hi_hz);
    const TinMethod method = tc.method == "direct" ? TinMethod::direct : TinMethod::fft;
    auto noise = flat_frequency_noise(1.0, band_limit, step);
    if (c.system.heating.tin_ratio > 0 && tc.intracavity_photons > 0)
        noise = calibrate_noise_level(noise, mode, lo, hi, tc.intracavity_photons, c.system.heating.tin_ratio);

    const double x0 = 1.0 / std::sqrt(3.0);
    std::vector<double> xs, detunings;
    const auto k_lo = static_cast<long>(std::ceil((tc.sweep_min - x0) / tc.sweep_step - 1e-9));
    const auto k_hi = static_cast<long>(std::floor((tc.sweep_max - x0) / tc.sweep_step + 1e-9));
    for (long k = k_lo; k <= k_hi; ++k) {
        const double x = x0 + static_cast<double>(k) * tc.sweep_step;
        xs.push_back(x);
        detunings.push_back(-x * mode.kappa() / 2);
    }
    const double photons = tc.intracavity_photons > 0 ? tc.intracavity_photons : 1.0;
    const auto sweep = tin_detuning_sweep(noise, mode, detunings, lo, hi, photons, method);
    Table ts;
    ts.columns = {"two_delta_over_kappa", "detuning_hz", "tin_over_shot_noise"};
    std::size_t best = 0;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        ts.add_row({xs[i], hz(sweep[i].detuning), sweep[i].ratio});
        if (sweep[i].ratio < sweep[best].ratio) best = i;
    }
    out.table("tin_sweep", ts);

    TinOptions to;
    to.method = method;
    to.intracavity_photons = tc.intracavity_photons;
    to.band_lo = lo;
    to.band_hi = hi;
    const auto spec = tin_second_order_psd(noise, mode, UniformAxis::symmetric(step, 2 * tc.half_points), to);
    Table tsp;
    tsp.columns = {"freq_hz", "s2_ii_relative_per_rad_s"};
    for (std::size_t i = 0; i < spec.second_order.size(); ++i)
        tsp.add_row({hz(spec.second_order.omega(i)), spec.second_order.values[i]});
    out.table("tin_spectrum", tsp);

    out.report("tin", {{"magic_two_delta_over_kappa", x0},
                       {"sweep_min_two_delta_over_kappa", sweep.empty() ? json(nullptr) : json(xs[best])},
                       {"sweep_min_ratio", sweep.empty() ? json(nullptr) : json(sweep[best].ratio)},
                       {"operating_detuning_hz", hz(mode.detuning())},
                       {"operating_ratio", spec.shot_noise_ratio},
                       {"s_delta_delta_level", noise.grid.values[noise.half_size()]},
                       {"third_order_coeff", spec.third_order_coeff},
                       {"fast_cavity_ratio", mode.kappa() / band_limit},
                       {"clipped_bins", spec.clipped_bins}});
}

void run_synth(const ExperimentConfig& c, const ResolvedSystem& r, Outputs& out) {
    const auto setup = make_synthesis(c, r);
    const auto s = synth_photocurrents(setup);
    out.series("stream1", s.stream1);
    out.series("stream2", s.stream2);
    if (s.calibration) {
        out.series("calibration_1", s.calibration->first);
        out.series("calibration_2", s.calibration->second);
    }
    if (s.cooling) out.series("cooling", *s.cooling);
    out.report("synth", {{"fs_hz", setup.fs},
                         {"n_samples", setup.n_samples},
                         {"seed", setup.seed},
                         {"omega_shifted_hz", hz(s.omega_shifted)},
                         {"gamma_opt_total_hz", hz(s.gamma_opt)},
                         {"n_eff_configured", r.n_eff},
                         {"injected_gain_ratio", setup.gain_ratio},
                         {"injected_delay_samples", c.synthesis.delay_samples},
                         {"fast_cavity_ratio", s.fast_cavity_ratio},
                         {"tin_scale", s.tin_scale},
                         {"tin_level_at_peak", s.tin_level_at_peak}});
}

void run_calibrate(const ExperimentConfig& c, const ResolvedSystem& r, Outputs& out) {
    const auto streams = load_streams(c, r);
    if (!streams.calibration)
        throw InputError("calibrate needs calibration_1/calibration_2 streams (synthesis.calibration_pair = true)");
    const auto o = thermometry_options(c, r);
    const auto cal = detector_cross_calibration(streams.calibration->first, streams.calibration->second, o.tones, o.welch);
    json j = calibration_json(cal, streams.s1.fs);
    if (streams.synthesized) {
        j["injected_gain_ratio"] = c.synthesis.gain_ratio;
        j["injected_delay_samples"] = c.synthesis.delay_samples;
    }
    out.report("calibration", j);
}

void run_dualhomodyne(const ExperimentConfig& c, const ResolvedSystem& r, Outputs& out) {
    const auto streams = load_streams(c, r);
    const auto o = thermometry_options(c, r);
    const auto rc = reconstruct(streams.s1, streams.s2, streams.calibration, make_chains(c), o);
    out.table("field", field_table(rc.rec.field, &rc.rec.s_xx, &rc.rec.s_yy, r.omega_shifted,
                                   hz_to_rad(c.analysis.spectrum_span_hz)));
    SidebandOptions so;
    so.masks = o.masks;
    const auto pair = sideband_ratio(rc.rec.field, r.omega_shifted, o.fit_half_width, so);
    json j = {{"conditioning", rc.rec.conditioning},
              {"integrated_ratio", pair.ratio},
              {"area_upper_quanta_hz", pair.area_pos},
              {"area_lower_quanta_hz", pair.area_neg},
              {"floor_quanta", pair.floor},
              {"convention", pair.convention}};
    if (rc.calibration) j["calibration"] = calibration_json(*rc.calibration, streams.s1.fs);
    out.report("dualhomodyne", j);
}

SpectrumGrid grid_from_table(const Table& t, const std::string& source) {
    const std::size_t fcol = t.column("freq_hz");
    std::size_t vcol = t.columns.size();
    for (const char* name : {"field_quanta", "probe_quanta", "value"})
        if (std::find(t.columns.begin(), t.columns.end(), name) != t.columns.end()) {
            vcol = t.column(name);
            break;
        }
    if (vcol == t.columns.size()) vcol = fcol == 0 ? 1 : 0;
    if (vcol >= t.columns.size() || t.rows.size() < 5) throw InputError(source + ": need freq_hz and a value column");
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : t.rows) pts.emplace_back(row[fcol], row[vcol]);
    std::sort(pts.begin(), pts.end());
    const double df = pts[1].first - pts[0].first;
    if (!(df > 0)) throw InputError(source + ": frequencies must be strictly increasing");
    SpectrumGrid g(UniformAxis{hz_to_rad(pts[0].first), hz_to_rad(df), 0}, SpectrumUnits::quanta);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double expected = pts[0].first + df * static_cast<double>(i);
        if (std::abs(pts[i].first - expected) > 1e-6 * std::abs(df))
            throw InputError(source + ": frequency axis is not uniform near " + std::to_string(pts[i].first) + " Hz");
        g.values.push_back(pts[i].second);
    }
    g.axis.size = g.values.size();
    return g;
}

void run_fit(const ExperimentConfig& c, const ResolvedSystem& r, Outputs& out) {
    if (!c.analysis.input) throw InputError("fit needs analysis.input pointing at a spectrum CSV");
    const fs::path path = *c.analysis.input;
    if (fs::is_directory(path)) throw InputError("fit needs a spectrum CSV, got directory " + path.string());
    const Table t = read_csv(path);
    const auto o = thermometry_options(c, r);
    FitOptions fo;
    fo.mask = o.masks;
    json fits = json::array();
    std::vector<Interval> windows;
    if (c.analysis.fit_window_hz.size() == 2)
        windows.push_back({hz_to_rad(c.analysis.fit_window_hz[0]), hz_to_rad(c.analysis.fit_window_hz[1])});
    else
        windows = {{-r.omega_shifted - o.fit_half_width, -r.omega_shifted + o.fit_half_width},
                   {r.omega_shifted - o.fit_half_width, r.omega_shifted + o.fit_half_width}};

    // The table may hold disjoint uniform runs; fit each window on the run that contains it.
    std::vector<std::vector<double>> rows = t.rows;
    const std::size_t fcol = t.column("freq_hz");
    std::sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) { return a[fcol] < b[fcol]; });
    for (const auto& win : windows) {
        Table part;
        part.columns = t.columns;
        for (const auto& row : rows) {
            const double w = hz_to_rad(row[fcol]);
            if (w >= win.first && w <= win.second) part.rows.push_back(row);
        }
        if (part.rows.size() < 5)
            throw InputError("fit window [" + std::to_string(hz(win.first)) + ", " + std::to_string(hz(win.second)) +
                             "] Hz holds fewer than 5 points of " + path.string());
        const auto grid = grid_from_table(part, path.string());
        auto f = fit_lorentzian(grid, win, fo);
        json j = fit_json(f);
        j["window_hz"] = {hz(win.first), hz(win.second)};
        fits.push_back(j);
    }
    json rep = {{"input", path.string()}, {"fits", fits}};
    if (fits.size() == 2) {
        const double a_lo = fits[0]["area_quanta_hz"], a_hi = fits[1]["area_quanta_hz"];
        const double e_lo = fits[0]["area_err_quanta_hz"], e_hi = fits[1]["area_err_quanta_hz"];
        const double ratio = a_hi / a_lo;
        rep["ratio"] = ratio;
        rep["ratio_err"] = std::abs(ratio) * std::hypot(e_hi / a_hi, e_lo / a_lo);
    }
    out.report("fit", rep);
}

void run_thermometry(const ExperimentConfig& c, const ResolvedSystem& r, Outputs& out) {
    const auto streams = load_streams(c, r);
    const auto o = thermometry_options(c, r);
    const auto t = analyze_thermometry(streams.s1, streams.s2, streams.calibration, make_chains(c), r.system.probe,
                                       r.omega_shifted, o);
    out.table("field", field_table(t.field, nullptr, nullptr, r.omega_shifted, hz_to_rad(c.analysis.spectrum_span_hz)));
    json j = {{"n_eff", t.occupancy.infinite ? json(nullptr) : json(t.occupancy.n)},
              {"n_eff_err", t.n_err},
              {"n_eff_alternate_labelling", t.occupancy.n_alternate},
              {"n_eff_configured", r.n_eff},
              {"ratio", t.ratio},
              {"ratio_err", t.ratio_err},
              {"asymmetry_factor_s", t.s},
              {"omega_shifted_hz", hz(t.omega_shifted)},
              {"orientation_mismatch", t.occupancy.orientation_mismatch},
              {"convention", t.occupancy.convention},
              {"upper_sideband", fit_json(t.upper)},
              {"lower_sideband", fit_json(t.lower)},
              {"integrated_ratio", t.integrated.ratio},
              {"integrated_floor_quanta", t.integrated.floor}};
    if (t.calibration) j["calibration"] = calibration_json(*t.calibration, streams.s1.fs);
    out.report("thermometry", j);
}

}  // namespace

RunManifest run_pipeline(const ExperimentConfig& config, Command command, const PipelineOptions& options) {
    RunManifest m;
    m.command = to_string(command);
    m.started_utc = utc_timestamp();
    m.config_hash = config_hash(config);
    m.seed = config.synthesis.seed;
    {
        WarningCapture capture(m.warnings);
        validate(config);
        const auto r = resolve_system(config);
        Outputs out(options.out_dir, m.config_hash, options.format);
        // defaults filled and echoed
        write_json(options.out_dir / "config.json", to_json(config));
        switch (command) {
        case Command::spectrum: run_spectrum(config, r, out); break;
        case Command::cool: run_cool(config, r, out); break;
        case Command::tin: run_tin(config, r, out); break;
        case Command::synth: run_synth(config, r, out); break;
        case Command::dualhomodyne: run_dualhomodyne(config, r, out); break;
        case Command::fit: run_fit(config, r, out); break;
        case Command::calibrate: run_calibrate(config, r, out); break;
        case Command::thermometry: run_thermometry(config, r, out); break;
        }
        m.outputs = out.files();
        m.outputs.insert(m.outputs.begin(), {"config.json", sha256_file(options.out_dir / "config.json")});
    }
    m.finished_utc = utc_timestamp();
    write_json(options.out_dir / "manifest.json", m.to_json());
    return m;
}

}  // namespace sideband
