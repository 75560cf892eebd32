// Acceptance runner: one PASS/FAIL line per criterion, details indented below it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sideband/config.hpp"
#include "sideband/cooling.hpp"
#include "sideband/detection.hpp"
#include "sideband/fitting.hpp"
#include "sideband/pipeline.hpp"
#include "sideband/synthesis.hpp"
#include "sideband/tin.hpp"
#include "sideband/units.hpp"
#include "sideband/welch.hpp"

using namespace sideband;
namespace fs = std::filesystem;

namespace {

const double tp = two_pi;

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
    void note(const std::string& what) { notes.push_back("     " + what); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> sweep_grid(const TinAnalysisConfig& t) {
    const double anchor = 1.0 / std::sqrt(3.0);
    std::vector<double> x;
    const long lo = static_cast<long>(std::ceil((t.sweep_min - anchor) / t.sweep_step - 1e-9));
    const long hi = static_cast<long>(std::floor((t.sweep_max - anchor) / t.sweep_step + 1e-9));
    for (long k = lo; k <= hi; ++k) x.push_back(anchor + static_cast<double>(k) * t.sweep_step);
    return x;
}

std::vector<TinSweepPoint> sweep(const FrequencyNoiseSpectrum& noise, const OpticalMode& beam, const std::vector<double>& x,
                                 const TinAnalysisConfig& t) {
    std::vector<double> d;
    for (double v : x) d.push_back(-v * beam.kappa() / 2);
    return tin_detuning_sweep(noise, beam, d, hz_to_rad(t.band_lo_hz), hz_to_rad(t.band_hi_hz), t.intracavity_photons);
}

Outcome magic_detuning() {
    Outcome o;
    const ExperimentConfig c;
    const auto& t = c.analysis.tin;
    const double band = hz_to_rad(t.band_limit_hz);
    const auto noise = flat_frequency_noise(1.0, band, band / static_cast<double>(t.half_points));
    const auto x = sweep_grid(t);
    const double magic = 1.0 / std::sqrt(3.0);

    const OpticalMode beam(hz_to_rad(14e6), 0, {0.9 * hz_to_rad(14e6)}, 0);
    const auto s = sweep(noise, beam, x, t);
    std::size_t best = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i].ratio < s[best].ratio) best = i;
    o.check(std::abs(x[best] - magic) <= t.sweep_step + 1e-12,
            fmt("kappa/2pi = 14 MHz: sweep minimum at 2D/k = %.4f (1/sqrt3 = %.4f, step %.3f)", x[best], magic,
                t.sweep_step));
    std::vector<double> fine;
    for (double v = 0.45; v <= 0.80 + 1e-12; v += 0.0025) fine.push_back(v);
    const auto sf = sweep(noise, beam, fine, t);
    std::size_t fb = 0;
    for (std::size_t i = 0; i < sf.size(); ++i)
        if (sf[i].ratio < sf[fb].ratio) fb = i;
    o.note(fmt("continuous minimum (step 0.0025) at 2D/k = %.4f", fine[fb]));

    const OpticalMode fast(hz_to_rad(14e9), 0, {0.9 * hz_to_rad(14e9)}, 0);
    const auto sfast = sweep(noise, fast, x, t);
    std::size_t fbest = 0;
    for (std::size_t i = 0; i < sfast.size(); ++i)
        if (sfast[i].ratio < sfast[fbest].ratio) fbest = i;
    const double off = sweep(noise, fast, {1.34}, t)[0].ratio;
    const double rel = sfast[fbest].ratio / off;
    o.check(std::abs(x[fbest] - magic) < 1e-9, fmt("kappa x 1000: minimum at 2D/k = %.4f", x[fbest]));
    o.check(rel < 1e-4, fmt("kappa x 1000: residual / off-magic(1.34) = %.3e", rel));
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    const double band = tp * 7e6;
    const auto noise = flat_frequency_noise(1.0, band, band / 32);
    double worst = 0;
    for (double x : {0.2, 1.0 / std::sqrt(3.0), 1.0, 1.34}) {
        const double k = tp * 14e6;
        const OpticalMode m(k, -x * k / 2, {0.9 * k}, 0);
        const auto a = tin_second_order_native(noise, m, TinMethod::fft);
        const auto b = tin_second_order_native(noise, m, TinMethod::direct);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            num = std::max(num, std::abs(a[i] - b[i]));
            den = std::max(den, std::abs(b[i]));
        }
        worst = std::max(worst, num / den);
    }
    o.check(worst <= 1e-6, fmt("%zu-point S_DD grid, 4 detunings: max |fft - direct| / max|direct| = %.2e",
                               noise.grid.size(), worst));
    return o;
}

Outcome equipartition() {
    Outcome o;
    const ExperimentConfig c;
    const auto r = resolve_system(c);
    const auto& sys = r.system;
    for (double target_hz : {0.0, 500.0, 2000.0, 5000.0, 7400.0}) {
        const OpticalMode others[] = {sys.probe};
        const double g = coupling_for_damping(sys.mode, sys.cooling.with_g(0), tp * target_hz, true, others);
        const OpticalMode cool = sys.cooling.with_g(g);
        const BackactionReport reps[] = {backaction(sys.mode, cool), backaction(sys.mode, sys.probe)};
        const auto occ = effective_occupancy(reps, sys.mode, sys.heating);
        const double wm = sys.mode.omega_m();
        const double step = occ.gamma_total / 60;
        const auto n = static_cast<std::size_t>(4 * wm / step) | 1;
        const auto axis = UniformAxis::span(-2 * wm, 2 * wm, n);
        const double area = integrate(displacement_psd(axis, sys.mode, cool, sys.probe, sys.heating));
        const double rel = area / (occ.n_eff + 0.5) - 1;
        o.check(std::abs(rel) < 0.01, fmt("Gopt/2pi = %6.0f Hz: n_eff = %10.4f, integral = %10.4f, rel %+.2e",
                                          target_hz, occ.n_eff, area, rel));
        const OpticalMode beams[] = {cool, sys.probe};
        const double ratio = wm / shifted_frequency(sys.mode, beams);
        o.note(fmt("spring-dressed (n_eff + 1/2)(Om/Om')^2 = %10.4f, rel %+.2e", (occ.n_eff + 0.5) * ratio * ratio,
                   area / ((occ.n_eff + 0.5) * ratio * ratio) - 1));
    }
    return o;
}

// Default probe with a cooling beam of linewidth Ω_m at the red sideband, so occupancies below
// the unresolved cooling floor are reachable; bath occupancy solved for n.
OpticalSystem thermometry_system(const OpticalSystem& base, double n) {
    const MechanicalMode m0 = base.mode.with_n_th(0);
    const double kc = m0.omega_m();
    const OpticalMode seed(kc, -m0.omega_m(), {kc}, 0);
    const OpticalMode others[] = {base.probe};
    const OpticalMode cool = seed.with_g(coupling_for_damping(m0, seed, tp * 5526, true, others));
    HeatingBudget h;
    const BackactionReport reps[] = {backaction(m0, cool), backaction(m0, base.probe)};
    const auto floor = effective_occupancy(reps, m0, h);
    h.n_th_effective = (n - floor.n_eff) * floor.gamma_total / m0.gamma();
    return OpticalSystem{m0.with_n_th(h.n_th_effective), cool, base.probe, h, base.probe_photons, {}, 0.0, base.eta};
}

Outcome analytic_round_trip() {
    Outcome o;
    const ExperimentConfig c;
    const auto r = resolve_system(c);
    const double s_ref = asymmetry_factor(tp * 1.167e6, r.system.probe);
    o.check(std::abs(s_ref - 0.9215) <= 1e-4, fmt("s(2pi x 1.167 MHz) = %.6f (hand-derived 0.9215)", s_ref));
    for (double n : {0.5, 1.0, 9.5, 100.0, 1e4}) {
        const auto sys = thermometry_system(r.system, n);
        const OpticalMode beams[] = {sys.cooling, sys.probe};
        const double wp = shifted_frequency(sys.mode, beams);
        const double hw = tp * 50e3, edge = wp + hw + tp * 10e3;
        const auto axis = UniformAxis::span(-edge, edge, 2 * static_cast<std::size_t>(edge / (tp * 5.0)) + 1);
        SidebandOptions so;
        so.floor = 0.5;
        so.weight = [&](double w) { return std::norm(chi_cav(-w, sys.probe)); };
        const auto pair = sideband_ratio(probe_output_psd(axis, sys), wp, hw, so);
        const auto est = occupancy_from_asymmetry(pair.ratio, asymmetry_factor(wp, sys.probe));
        const double rel = est.n / n - 1;
        o.check(std::abs(rel) < 0.005, fmt("n = %7.1f: R = %.8f, recovered %.5f (rel %+.2e)", n, pair.ratio, est.n, rel));
    }
    return o;
}

Outcome calibration_line() {
    Outcome o;
    const ExperimentConfig c;
    const auto r = resolve_system(c);
    const OpticalMode& probe = r.system.probe;
    const auto ens = make_ensemble(c);

    // defect point: Lorentzian-fit area ratio of the analytic probe spectrum, same windows as thermometry.
    // The ensemble's frequency-noise tails sit under both lines; the fitted background absorbs them.
    const double wp = r.omega_shifted;
    const double hw = c.analysis.fit_half_width * (r.system.mode.gamma() + r.gamma_opt_total);
    const double edge = wp + 2 * hw;
    const auto axis = UniformAxis::span(-edge, edge, 2 * static_cast<std::size_t>(edge / (tp * 5.0)) + 1);
    const auto psd = probe_output_psd(axis, r.system);
    const double defect_ratio = fit_lorentzian(psd, {wp - hw, wp + hw}).area / fit_lorentzian(psd, {-wp - hw, -wp + hw}).area;
    const double dev_true = (r.n_eff + 1) / r.n_eff - 1;

    const double sigma_area = 0.005;  // per-sideband relative area error of one calibration mode
    const int seeds = 50;
    int k1 = 0, k2 = 0, d1 = 0, d2 = 0, dev2 = 0;
    double dev_sum = 0;
    for (int seed = 1; seed <= seeds; ++seed) {
        auto rng = substream(static_cast<std::uint64_t>(seed), Stream::frequency_noise);
        std::normal_distribution<double> normal;
        std::vector<AsymmetryPoint> pts;
        for (const auto& e : ens.modes) {
            const double w = e.mode.omega_m(), n = e.mode.n_th();
            const double truth = asymmetry_factor(w, probe) * (n + 1) / n;
            const double meas = truth * (1 + sigma_area * normal(rng)) / (1 + sigma_area * normal(rng));
            pts.push_back({w, meas, truth * std::sqrt(2.0) * sigma_area});
        }
        const OpticalMode guess(0.8 * probe.kappa(), 0.8 * probe.detuning(), {}, 0);
        const auto cal = calibrate_cavity_asymmetry(pts, guess);
        const double pk = std::abs(cal.kappa - probe.kappa()) / cal.kappa_err;
        const double pd = std::abs(cal.detuning - probe.detuning()) / cal.detuning_err;
        k1 += pk < 1;
        k2 += pk < 2;
        d1 += pd < 1;
        d2 += pd < 2;
        const double dev = defect_ratio / cal.s(wp) - 1;
        const double dev_err = (1 + dev) * cal.s_err(wp) / cal.s(wp);
        dev2 += std::abs(dev - dev_true) < 2 * dev_err;
        dev_sum += dev;
    }
    const auto frac = [&](int k) { return static_cast<double>(k) / seeds; };
    o.check(frac(k1) >= 0.55 && frac(k2) >= 0.88,
            fmt("kappa inside 1/2 standard errors in %.0f%% / %.0f%% of %d seeds", 100 * frac(k1), 100 * frac(k2), seeds));
    o.check(frac(d1) >= 0.55 && frac(d2) >= 0.88,
            fmt("detuning inside 1/2 standard errors in %.0f%% / %.0f%% of %d seeds", 100 * frac(d1), 100 * frac(d2),
                seeds));
    const double dev_mean = dev_sum / seeds;
    // thermometry reads n = 9.57 here rather than 9.5 (spring-dressed line), so seed coverage of the
    // exact value is reported but the gate is the deviation itself
    o.check(std::abs(dev_mean / dev_true - 1) < 0.01,
            fmt("defect point at n = %.2f: mean deviation from fitted s %+.4f (expected %+.4f, rel %+.2e)", r.n_eff,
                dev_mean, dev_true, dev_mean / dev_true - 1));
    o.note(fmt("defect deviation within 2 calibration errors of %+.4f in %.0f%% of seeds", dev_true, 100 * frac(dev2)));
    return o;
}

struct Bins {
    std::size_t inside = 0, total = 0;
};

Bins compare_welch(const TimeSeries& s, const SpectrumGrid& expected, const WelchOptions& w) {
    const auto est = welch_psd(s, w);
    Bins b;
    for (std::size_t k = 1; k < est.psd.size(); ++k) {
        if (k == est.psd.size() / 2) continue;  // DC
        const double e = expected.values[k];
        ++b.total;
        b.inside += std::abs(est.psd.values[k] - e) <= 3 * est.relative_sigma * e;
    }
    return b;
}

void stochastic(Outcome& c6, Outcome& c7) {
    ExperimentConfig c;
    c.synthesis.cooling_stream = true;
    const auto r = resolve_system(c);
    auto setup = make_synthesis(c, r);
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = synth_photocurrents(setup);
    const double t_synth = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto opts = thermometry_options(c, r);
    const auto t = analyze_thermometry(out.stream1, out.stream2, out.calibration, setup.chains, r.system.probe,
                                       r.omega_shifted, opts);
    c6.note(fmt("%zu samples at %.2f MHz, synthesis %.0f s; TIN level at peak %.3f of target", setup.n_samples,
                setup.fs / 1e6, t_synth, out.tin_level_at_peak));

    const auto& cal = *t.calibration;
    const double gain_rel = cal.gain_ratio / c.synthesis.gain_ratio - 1;
    const double delay = cal.phase_delay * setup.fs;
    c6.check(std::abs(gain_rel) <= 1e-3, fmt("gain ratio %.5f +- %.5f (injected %.2f, rel %+.1e)", cal.gain_ratio,
                                             cal.gain_err, c.synthesis.gain_ratio, gain_rel));
    c6.check(std::abs(delay - c.synthesis.delay_samples) <= 0.01,
             fmt("delay %.4f +- %.4f samples (injected %.1f)", delay, cal.delay_err * setup.fs, c.synthesis.delay_samples));
    c6.check(std::abs(t.occupancy.n - r.n_eff) <= 3 * t.n_err,
             fmt("n = %.3f +- %.3f (configured %.3f); R = %.4f +- %.4f, s = %.4f; integrated-area R = %.4f",
                 t.occupancy.n, t.n_err, r.n_eff, t.ratio, t.ratio_err, t.s, t.integrated.ratio));

    const auto truth = analytic_system(setup);
    Bins all;
    for (int i = 0; i < 2; ++i) {
        const auto& s = i == 0 ? out.stream1 : out.stream2;
        const auto exp = expected_chain_psd(truth, setup.chains[i], i, i == 0 ? 1.0 : setup.gain_ratio, setup.fs,
                                            opts.welch);
        const auto b = compare_welch(s, exp, opts.welch);
        c6.note(fmt("stream %d: %zu / %zu bins inside 3 sigma", i + 1, b.inside, b.total));
        all.inside += b.inside;
        all.total += b.total;
    }
    const double frac = static_cast<double>(all.inside) / static_cast<double>(all.total);
    c6.check(frac >= 0.95, fmt("Welch PSDs within 3 sigma of the analytic curves on %.2f%% of bins", 100 * frac));

    // widths: probe from the reconstructed sideband fits, cooling from the amplitude-quadrature stream
    const double wu = t.upper.fwhm, eu = t.upper.fwhm_err(), wl = t.lower.fwhm, el = t.lower.fwhm_err();
    const double wt = 1 / (eu * eu) + 1 / (el * el);
    const double probe_w = (wu / (eu * eu) + wl / (el * el)) / wt, probe_e = 1 / std::sqrt(wt);
    const auto cw = welch_psd(*out.cooling, opts.welch);
    FitOptions fo;
    fo.mask = opts.masks;
    const auto cf = fit_lorentzian(cw.psd, {r.omega_shifted - opts.fit_half_width, r.omega_shifted + opts.fit_half_width}, fo);
    const double truth_hz = c.system.cooling.gamma_opt_hz.value_or(0);
    const double total_hz = rad_to_hz(r.system.mode.gamma() + r.gamma_opt_total);
    c7.note(fmt("TIN at %.0f%% of shot noise; realized linewidth (G + cooling + probe damping)/2pi = %.1f Hz",
                100 * r.tin_ratio, total_hz));
    c7.check(cf.fwhm - probe_w > 0,
             fmt("cooling-beam fit %.1f +- %.1f Hz exceeds probe fit %.1f +- %.1f Hz (difference %.1f sigma)", rad_to_hz(cf.fwhm),
                 rad_to_hz(cf.fwhm_err()), rad_to_hz(probe_w), rad_to_hz(probe_e),
                 (cf.fwhm - probe_w) / std::hypot(cf.fwhm_err(), probe_e)));
    c7.check(std::abs(rad_to_hz(probe_w) - truth_hz) <= rad_to_hz(probe_e),
             fmt("probe fit %.1f Hz vs cooling damping %.0f Hz: %.2f standard errors (vs realized linewidth: %.2f)",
                 rad_to_hz(probe_w), truth_hz, (rad_to_hz(probe_w) - truth_hz) / rad_to_hz(probe_e), (rad_to_hz(probe_w) - total_hz) / rad_to_hz(probe_e)));
}

Outcome backaction_consistency() {
    Outcome o;
    const ExperimentConfig c;
    const auto r = resolve_system(c);
    const auto& sys = r.system;
    const auto rep = backaction(sys.mode, sys.cooling);
    o.check(rep.n_min > 0.7 && rep.n_min < 70,
            fmt("n_min = A+/(A- - A+) = %.4f quanta (closed form %.4f; with kappa^2 in place of (kappa/2)^2: %.4f)",
                rep.n_min, rep.n_min_closed, rep.n_min_printed));
    double worst = 0;
    for (double g : {1e2, 1e4, 3.0194378e5, 1e6, 5e6}) {
        const double n = backaction(sys.mode, sys.cooling.with_g(tp * g)).n_min;
        worst = std::max(worst, std::abs(n / rep.n_min - 1));
    }
    o.check(worst <= 1e-12, fmt("g from 2pi x 100 Hz to 2pi x 5 MHz: max relative change %.1e", worst));
    const double wm = sys.mode.omega_m(), k = wm / 100;
    const auto res = backaction(sys.mode, OpticalMode(k, -wm, {k}, tp * 1e3));
    const double asym = std::pow(k / (4 * wm), 2);
    o.check(std::abs(res.n_min / asym - 1) < 0.01,
            fmt("kappa = Omega/100, D = -Omega: n_min = %.6e, (kappa/4 Omega)^2 = %.6e", res.n_min, asym));
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    Outcome o;
    ExperimentConfig c;
    c.synthesis.n_samples = std::size_t{1} << 18;
    c.analysis.segment_length = 16384;
    const fs::path root = fs::temp_directory_path() / "sideband_acceptance_rerun";
    fs::remove_all(root);
    for (auto cmd : {Command::spectrum, Command::cool, Command::tin, Command::synth, Command::calibrate,
                     Command::dualhomodyne, Command::thermometry}) {
        const auto name = to_string(cmd);
        const auto a = run_pipeline(c, cmd, {root / name / "a", OutputFormat::csv});
        const auto b = run_pipeline(c, cmd, {root / name / "b", OutputFormat::csv});
        bool same = a.outputs.size() == b.outputs.size();
        for (std::size_t i = 0; same && i < a.outputs.size(); ++i)
            same = a.outputs[i].path == b.outputs[i].path &&
                   slurp(root / name / "a" / a.outputs[i].path) == slurp(root / name / "b" / b.outputs[i].path);
        o.check(same, fmt("%-12s %zu output files byte-identical across reruns (seed %llu)", name.c_str(),
                          a.outputs.size(), static_cast<unsigned long long>(*c.synthesis.seed)));
    }
    fs::remove_all(root);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria report"};
    std::vector<int> only;
    bool strict = false;
    app.add_option("criteria", only, "criterion numbers to run (default all)")->check(CLI::Range(1, 9));
    app.add_flag("--strict", strict, "exit 1 if any criterion fails");
    CLI11_PARSE(app, argc, argv);
    const auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
    const std::vector<std::pair<int, Outcome (*)()>> quick = {
        {1, magic_detuning}, {2, oracle_equivalence}, {3, equipartition},          {4, analytic_round_trip},
        {5, calibration_line}, {8, backaction_consistency}, {9, determinism},
    };
    const char* names[] = {"magic-detuning cancellation", "FFT vs direct TIN oracle", "equipartition",
                           "analytic thermometry round trip", "calibration line", "end-to-end stochastic pipeline",
                           "TIN interference broadening", "backaction consistency", "determinism"};
    int failures = 0;
    auto report = [&](int id, const Outcome& o, double secs) {
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << names[id - 1]
                  << fmt(" (%.1f s)", secs) << '\n';
        for (const auto& n : o.notes) std::cout << "    " << n << '\n';
        std::cout.flush();
        failures += !o.pass;
    };
    auto guarded = [](const std::function<void()>& f, Outcome& o) {
        try {
            f();
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
    };
    for (const auto& [id, f] : quick) {
        if (!wanted(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        guarded([&] { o = f(); }, o);
        report(id, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    if (wanted(6) || wanted(7)) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome c6, c7;
        guarded([&] { stochastic(c6, c7); }, c6);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (wanted(6)) report(6, c6, secs);
        if (wanted(7)) report(7, c7, secs);
    }
    std::cout << (failures == 0 ? "all criteria passed" : fmt("%d criteria failed", failures)) << '\n';
    // the report itself is the product; --strict turns a FAIL line into a failing exit
    return strict && failures > 0 ? 1 : 0;
}
