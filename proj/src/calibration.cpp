#include "memlif/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "memlif/csv.hpp"
#include "memlif/neuron.hpp"

namespace memlif {

AnchorSet default_anchors() {
    AnchorSet set;
    auto add = [&](Anchor a) { set.anchors.push_back(std::move(a)); };

    auto dc = [&](double i_syn, double vthr, double target,
                  const std::string& src) {
        Anchor a;
        a.kind = AnchorKind::DcRate;
        a.i_syn = i_syn;
        a.vthr = vthr;
        a.target = target;
        a.source = src;
        add(a);
    };
    dc(10e-6, 1.8, 419.0, "transfer curve, 10 uA drive, 1.8 V threshold");
    dc(200e-6, 1.8, 59e3, "transfer curve, 200 uA drive, 1.8 V threshold");
    dc(10e-6, 0.8, 800.0, "transfer curve, 10 uA drive, 0.8 V threshold");
    dc(200e-6, 0.8, 68e3, "transfer curve, 200 uA drive, 0.8 V threshold");

    auto maxrate = [&](double vpw, double target, const std::string& src) {
        Anchor a;
        a.kind = AnchorKind::MaxRate;
        a.vpw = vpw;
        a.i_syn = 200e-6; // full drive
        a.vthr = 1.2;
        a.target = target;
        a.source = src;
        add(a);
    };
    maxrate(0.8, 20e3, "rate ceiling, vpw 0.8 V");
    maxrate(1.1, 92e3, "rate ceiling, vpw 1.1 V");

    auto pw = [&](double vpw, double target, const std::string& src) {
        Anchor a;
        a.kind = AnchorKind::PulseWidth;
        a.vpw = vpw;
        a.target = target;
        a.source = src;
        add(a);
    };
    pw(0.45, 20e-3, "output pulse width, vpw 0.45 V");
    pw(1.0, 10e-6, "output pulse width, vpw 1.0 V");

    {
        Anchor a;
        a.kind = AnchorKind::LeakDecay;
        a.vtaun = 1.35;
        a.target = 8e-3;
        a.source = "threshold-to-rest decay, vtaun 1.35 V";
        add(a);
        a.vtaun = 1.0;
        a.target = 2.0;
        a.bound = AnchorBound::AtLeast;
        a.source = "threshold-to-rest decay, vtaun 1.0 V (slower than 2 s)";
        add(a);
    }

    auto pulsed = [&](double width, double target, const std::string& src) {
        Anchor a;
        a.kind = AnchorKind::PulsedRate;
        a.i_syn = 40e-6;
        a.pulse_width_s = width;
        a.pulse_rate_hz = 100.0;
        a.target = target;
        a.source = src;
        add(a);
    };
    pulsed(10e-6, 8.0, "pulsed drive, 10 us pulses at 100 Hz");
    pulsed(7e-6, 2.0, "pulsed drive, 7 us pulses at 100 Hz");
    pulsed(15e-6, 18.0, "pulsed drive, 15 us pulses at 100 Hz");

    {
        Anchor a;
        a.kind = AnchorKind::ChargeCount;
        a.i_syn = 40e-6;
        a.pulse_width_s = 15e-6;
        a.pulse_rate_hz = 100.0;
        a.target = 5.0;
        a.source = "charge-to-fire pulse count, 15 us pulses";
        add(a);
    }
    return set;
}

namespace {

constexpr double kVrest = 0.6;

double effective_leak(double i0, double slope, double vtau) {
    return i0 * std::exp((vtau - 1.2) / slope);
}

} // namespace

double predict_observable(const Anchor& a, const NeuronParams& p,
                          double vpw_dc) {
    const double i = a.i_syn / p.attenuation_k;
    const double i_dn = effective_leak(p.i_dn0, p.v_leak_slope, a.vtaun);
    const double i_up = p.i_up0; // vtaup stays typical in every anchor

    switch (a.kind) {
        case AnchorKind::DcRate: {
            BiasConfig b;
            b.vthr = a.vthr;
            b.vpw = vpw_dc;
            b.vtaun = a.vtaun;
            return analytic_rate(a.i_syn, b, p);
        }
        case AnchorKind::MaxRate: {
            BiasConfig b;
            b.vthr = a.vthr;
            b.vpw = a.vpw;
            b.vtaun = a.vtaun;
            return analytic_rate(a.i_syn, b, p);
        }
        case AnchorKind::PulseWidth:
            return pulse_width(a.vpw, p);
        case AnchorKind::LeakDecay:
            return p.c1 * (a.vthr - kVrest) / i_dn;
        case AnchorKind::PulsedRate: {
            const double w = a.pulse_width_s;
            const double period = 1.0 / a.pulse_rate_hz;
            const double gain_climb = ((i - i_dn) * w - i_dn * (period - w)) / p.c1;
            if (gain_climb <= 0.0) return 0.0;
            const double gain_recover = ((i + i_up) * w + i_up * (period - w)) / p.c1;
            const double cycles = kVrest / gain_recover + (a.vthr - kVrest) / gain_climb;
            return 1.0 / (cycles * period);
        }
        case AnchorKind::ChargeCount: {
            const double w = a.pulse_width_s;
            const double period = 1.0 / a.pulse_rate_hz;
            const double up = (i - i_dn) * w / p.c1;       // gain inside a pulse
            const double down = i_dn * (period - w) / p.c1; // decay between pulses
            if (up <= down) return 1e9; // never charges up
            // Continuous proxy for "fires during the ceil(m)-th pulse".
            return (a.vthr - kVrest - down) / (up - down) + 0.5;
        }
    }
    return 0.0;
}

double anchor_relative_error(const Anchor& a, double simulated) {
    const double rel = simulated / a.target - 1.0;
    if (a.bound == AnchorBound::AtLeast && simulated >= a.target) return 0.0;
    return rel;
}

void fit_pulse_width_map(const AnchorSet& anchors, NeuronParams& params) {
    std::vector<std::pair<double, double>> pts; // (vpw, log target)
    for (const auto& a : anchors.anchors)
        if (a.kind == AnchorKind::PulseWidth && a.target > 0.0)
            pts.emplace_back(a.vpw, std::log(a.target));
    if (pts.size() < 2) return;

    // log T = log t0 - (v - v0)/slope: linear regression of log T on v.
    double sv = 0, sl = 0, svv = 0, svl = 0;
    for (auto [v, l] : pts) {
        sv += v;
        sl += l;
        svv += v * v;
        svl += v * l;
    }
    const double n = (double)pts.size();
    const double denom = n * svv - sv * sv;
    if (denom == 0.0) return; // all at the same vpw; leave the map alone
    const double beta = (n * svl - sv * sl) / denom; // d(log T)/d(vpw) < 0
    if (!(beta < 0.0)) return;
    const double v_mean = sv / n;
    const double l_mean = sl / n;
    params.pw_slope = -1.0 / beta;
    params.pw_v0 = v_mean;
    params.pw_t0 = std::exp(l_mean);
}

namespace {

struct FitSpace {
    // x = [ln c1, ln i_dn0, ln i_up0, ln slope, vpw_dc]
    static constexpr int dim = 5;
    double lo[5] = {std::log(0.1e-12), std::log(1e-12), std::log(1e-12),
                    std::log(0.02), 0.45};
    double hi[5] = {std::log(100e-12), std::log(100e-9), std::log(100e-9),
                    std::log(0.3), 1.1};

    void clamp(std::vector<double>& x) const {
        for (int i = 0; i < dim; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    }
    void apply(const std::vector<double>& x, NeuronParams& p,
               double& vpw_dc) const {
        p.c1 = std::exp(x[0]);
        p.i_dn0 = std::exp(x[1]);
        p.i_up0 = std::exp(x[2]);
        p.v_leak_slope = std::exp(x[3]);
        vpw_dc = x[4];
    }
};

struct NelderMeadResult {
    std::vector<double> x;
    double fx = std::numeric_limits<double>::infinity();
    std::size_t evals = 0;
    bool converged = false;
};

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const FitSpace& space,
                             std::size_t max_evals, double ftol) {
    const int n = FitSpace::dim;
    NelderMeadResult res;

    std::vector<std::vector<double>> simplex;
    std::vector<double> fv;
    space.clamp(x0);
    simplex.push_back(x0);
    for (int i = 0; i < n; ++i) {
        auto xi = x0;
        const double span = space.hi[i] - space.lo[i];
        xi[i] += 0.08 * span;
        space.clamp(xi);
        if (xi[i] == x0[i]) xi[i] -= 0.08 * span;
        space.clamp(xi);
        simplex.push_back(xi);
    }
    for (auto& v : simplex) fv.push_back(f(v));
    res.evals = simplex.size();

    auto order = [&]() {
        std::vector<std::size_t> idx(simplex.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (auto i : idx) {
            s2.push_back(simplex[i]);
            f2.push_back(fv[i]);
        }
        simplex.swap(s2);
        fv.swap(f2);
    };

    while (res.evals < max_evals) {
        order();
        if (std::abs(fv.back() - fv.front()) <=
            ftol * (std::abs(fv.front()) + 1e-300)) {
            res.converged = true;
            break;
        }
        // Centroid of all but the worst.
        std::vector<double> c(n, 0.0);
        for (std::size_t i = 0; i + 1 < simplex.size(); ++i)
            for (int d = 0; d < n; ++d) c[d] += simplex[i][d];
        for (int d = 0; d < n; ++d) c[d] /= (double)(simplex.size() - 1);

        auto make = [&](double coef) {
            std::vector<double> x(n);
            for (int d = 0; d < n; ++d)
                x[d] = c[d] + coef * (simplex.back()[d] - c[d]);
            space.clamp(x);
            return x;
        };

        auto xr = make(-1.0);
        const double fr = f(xr);
        ++res.evals;
        if (fr < fv.front()) {
            auto xe = make(-2.0);
            const double fe = f(xe);
            ++res.evals;
            if (fe < fr) {
                simplex.back() = xe;
                fv.back() = fe;
            } else {
                simplex.back() = xr;
                fv.back() = fr;
            }
        } else if (fr < fv[fv.size() - 2]) {
            simplex.back() = xr;
            fv.back() = fr;
        } else {
            auto xc = make(fr < fv.back() ? -0.5 : 0.5);
            const double fc = f(xc);
            ++res.evals;
            if (fc < std::min(fr, fv.back())) {
                simplex.back() = xc;
                fv.back() = fc;
            } else {
                // Shrink toward the best vertex.
                for (std::size_t i = 1; i < simplex.size(); ++i) {
                    for (int d = 0; d < n; ++d)
                        simplex[i][d] =
                            simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
                    space.clamp(simplex[i]);
                    fv[i] = f(simplex[i]);
                    ++res.evals;
                }
            }
        }
    }
    order();
    res.x = simplex.front();
    res.fx = fv.front();
    return res;
}

} // namespace

FitResult fit(const AnchorSet& anchors, const NeuronParams& initial,
              std::uint64_t seed, int restarts) {
    if (anchors.anchors.empty())
        throw std::invalid_argument("fit: anchor set is empty");

    FitResult result;
    result.params = initial;
    fit_pulse_width_map(anchors, result.params);

    const FitSpace space;
    NeuronParams proto = result.params; // carries pw map + fixed constants

    auto objective = [&](const std::vector<double>& x) {
        NeuronParams p = proto;
        double vpw_dc = 1.0;
        space.apply(x, p, vpw_dc);
        double J = 0.0;
        for (const auto& a : anchors.anchors) {
            const double sim = predict_observable(a, p, vpw_dc);
            const double floor = 1e-9 * a.target;
            double r = std::log(std::max(sim, floor) / a.target);
            if (a.bound == AnchorBound::AtLeast) r = std::min(0.0, r);
            J += a.weight * r * r;
        }
        return std::isfinite(J) ? J
                                : std::numeric_limits<double>::infinity();
    };

    auto track = [&](const std::vector<double>& x) {
        const double J = objective(x);
        const double prev = result.best_objective_history.empty()
                                ? J
                                : result.best_objective_history.back();
        result.best_objective_history.push_back(std::min(J, prev));
        return J;
    };

    std::vector<std::vector<double>> starts;
    starts.push_back({std::log(initial.c1), std::log(initial.i_dn0),
                      std::log(initial.i_up0), std::log(initial.v_leak_slope),
                      1.0});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int r = 0; r < restarts; ++r) {
        std::vector<double> x(FitSpace::dim);
        for (int d = 0; d < FitSpace::dim; ++d)
            x[d] = space.lo[d] + uni(rng) * (space.hi[d] - space.lo[d]);
        starts.push_back(std::move(x));
    }

    NelderMeadResult best;
    bool any_ok = false;
    for (auto& x0 : starts) {
        NelderMeadResult nm;
        try {
            nm = nelder_mead(track, x0, space, 40000, 1e-12);
        } catch (const std::exception&) {
            continue; // non-finite objective path: move on to the next start
        }
        result.iterations += nm.evals;
        if (!std::isfinite(nm.fx)) continue;
        any_ok = true;
        if (nm.fx < best.fx) best = nm;
    }

    result.converged = any_ok && best.converged;
    if (!best.x.empty())
        space.apply(best.x, result.params, result.vpw_dc);
    result.objective = best.fx;

    result.residuals.clear();
    for (const auto& a : anchors.anchors) {
        const double sim = predict_observable(a, result.params, result.vpw_dc);
        result.residuals.push_back(anchor_relative_error(a, sim));
    }
    return result;
}

std::vector<ResidualRow> residual_report(const FitResult& fit,
                                         const AnchorSet& anchors) {
    std::vector<ResidualRow> rows;
    for (const auto& a : anchors.anchors) {
        ResidualRow row;
        row.descriptor = a.source;
        row.target = a.target;
        row.simulated = predict_observable(a, fit.params, fit.vpw_dc);
        row.rel_error = anchor_relative_error(a, row.simulated);
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ResidualRow& a, const ResidualRow& b) {
                         return std::abs(a.rel_error) > std::abs(b.rel_error);
                     });
    return rows;
}

std::vector<std::string> residual_report_csv(
    const std::vector<ResidualRow>& rows) {
    std::vector<std::string> lines;
    lines.push_back("descriptor,target,simulated,rel_error");
    for (const auto& r : rows) {
        std::string desc = r.descriptor;
        std::replace(desc.begin(), desc.end(), ',', ';');
        lines.push_back(desc + "," + csv::format_double(r.target) + "," +
                        csv::format_double(r.simulated) + "," +
                        csv::format_double(r.rel_error));
    }
    return lines;
}

namespace {

const char* kind_name(AnchorKind k) {
    switch (k) {
        case AnchorKind::DcRate: return "dc_rate";
        case AnchorKind::MaxRate: return "max_rate";
        case AnchorKind::PulseWidth: return "pulse_width";
        case AnchorKind::LeakDecay: return "leak_decay";
        case AnchorKind::PulsedRate: return "pulsed_rate";
        case AnchorKind::ChargeCount: return "charge_count";
    }
    return "?";
}

AnchorKind kind_from_name(const std::string& s, std::size_t line) {
    if (s == "dc_rate") return AnchorKind::DcRate;
    if (s == "max_rate") return AnchorKind::MaxRate;
    if (s == "pulse_width") return AnchorKind::PulseWidth;
    if (s == "leak_decay") return AnchorKind::LeakDecay;
    if (s == "pulsed_rate") return AnchorKind::PulsedRate;
    if (s == "charge_count") return AnchorKind::ChargeCount;
    throw std::runtime_error("anchors csv line " + std::to_string(line) +
                             ": unknown kind '" + s + "'");
}

} // namespace

AnchorSet load_anchors_csv(const std::string& path) {
    const auto rows = csv::read_table(path);
    if (rows.empty())
        throw std::runtime_error("anchors csv is empty: " + path);
    const std::vector<std::string> header = {
        "kind", "target", "weight", "bound", "i_syn", "vthr",
        "vpw",  "vtaun",  "pulse_width_s", "pulse_rate_hz", "source"};
    if (rows[0] != header)
        throw std::runtime_error(path + " line 1: bad anchors header");
    AnchorSet set;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t line = r + 1;
        if (row.size() != header.size())
            throw std::runtime_error(path + " line " + std::to_string(line) +
                                     ": expected " +
                                     std::to_string(header.size()) +
                                     " columns, got " +
                                     std::to_string(row.size()));
        auto num = [&](std::size_t col) {
            try {
                return csv::parse_double(row[col]);
            } catch (const std::exception& e) {
                throw std::runtime_error(path + " line " +
                                         std::to_string(line) + " column " +
                                         std::to_string(col + 1) + ": " +
                                         e.what());
            }
        };
        Anchor a;
        a.kind = kind_from_name(row[0], line);
        a.target = num(1);
        a.weight = num(2);
        if (row[3] == "eq") a.bound = AnchorBound::Equal;
        else if (row[3] == "min") a.bound = AnchorBound::AtLeast;
        else
            throw std::runtime_error(path + " line " + std::to_string(line) +
                                     ": bound must be eq or min");
        a.i_syn = num(4);
        a.vthr = num(5);
        a.vpw = num(6);
        a.vtaun = num(7);
        a.pulse_width_s = num(8);
        a.pulse_rate_hz = num(9);
        a.source = row[10];
        if (!(a.target > 0.0))
            throw std::runtime_error(path + " line " + std::to_string(line) +
                                     ": target must be positive");
        set.anchors.push_back(std::move(a));
    }
    if (set.anchors.empty())
        throw std::runtime_error(path + ": no anchors after header");
    return set;
}

void save_anchors_csv(const AnchorSet& anchors, const std::string& path) {
    std::vector<std::string> lines;
    lines.push_back(
        "kind,target,weight,bound,i_syn,vthr,vpw,vtaun,pulse_width_s,"
        "pulse_rate_hz,source");
    for (const auto& a : anchors.anchors) {
        std::string source = a.source;
        std::replace(source.begin(), source.end(), ',', ';');
        std::vector<std::string> f;
        f.push_back(kind_name(a.kind));
        f.push_back(csv::format_double(a.target));
        f.push_back(csv::format_double(a.weight));
        f.push_back(a.bound == AnchorBound::Equal ? "eq" : "min");
        f.push_back(csv::format_double(a.i_syn));
        f.push_back(csv::format_double(a.vthr));
        f.push_back(csv::format_double(a.vpw));
        f.push_back(csv::format_double(a.vtaun));
        f.push_back(csv::format_double(a.pulse_width_s));
        f.push_back(csv::format_double(a.pulse_rate_hz));
        f.push_back(source);
        lines.push_back(csv::join(f));
    }
    csv::write_lines(path, lines);
}

void save_params_file(const CalibratedParams& cp, const std::string& path) {
    const NeuronParams& p = cp.neuron;
    std::vector<std::string> lines;
    auto put = [&](const char* k, double v) {
        lines.push_back(std::string(k) + "=" + csv::format_double(v));
    };
    put("c1", p.c1);
    put("attenuation_k", p.attenuation_k);
    put("i_dn0", p.i_dn0);
    put("i_up0", p.i_up0);
    put("v_leak_slope", p.v_leak_slope);
    put("pw_t0", p.pw_t0);
    put("pw_v0", p.pw_v0);
    put("pw_slope", p.pw_slope);
    put("vreset", p.vreset);
    lines.push_back(std::string("comparator_mode=") +
                    (p.comparator_mode == ComparatorMode::Fast ? "fast"
                                                               : "low_power"));
    put("vpw_dc", cp.vpw_dc);
    csv::write_lines(path, lines);
}

CalibratedParams load_params_file(const std::string& path) {
    const auto rows = csv::read_table(path, '=');
    CalibratedParams cp;
    NeuronParams& p = cp.neuron;
    auto trim = [](const std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return std::string();
        return s.substr(b, s.find_last_not_of(" \t") - b + 1);
    };
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t line = r + 1;
        if (rows[r].size() != 2)
            throw std::runtime_error(path + " line " + std::to_string(line) +
                                     ": expected key=value");
        const std::string key = trim(rows[r][0]);
        const std::string val = trim(rows[r][1]);
        if (key == "comparator_mode") {
            if (val == "fast") p.comparator_mode = ComparatorMode::Fast;
            else if (val == "low_power")
                p.comparator_mode = ComparatorMode::LowPower;
            else
                throw std::runtime_error(path + " line " +
                                         std::to_string(line) +
                                         ": bad comparator_mode");
            continue;
        }
        double v;
        try {
            v = csv::parse_double(val);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + " line " + std::to_string(line) +
                                     ": " + e.what());
        }
        if (key == "c1") p.c1 = v;
        else if (key == "attenuation_k") p.attenuation_k = v;
        else if (key == "i_dn0") p.i_dn0 = v;
        else if (key == "i_up0") p.i_up0 = v;
        else if (key == "v_leak_slope") p.v_leak_slope = v;
        else if (key == "pw_t0") p.pw_t0 = v;
        else if (key == "pw_v0") p.pw_v0 = v;
        else if (key == "pw_slope") p.pw_slope = v;
        else if (key == "vreset") p.vreset = v;
        else if (key == "vpw_dc") cp.vpw_dc = v;
        else
            throw std::runtime_error(path + " line " + std::to_string(line) +
                                     ": unknown key '" + key + "'");
    }
    const auto viol = validate(p);
    if (!viol.empty())
        throw std::runtime_error(path + ": " + viol.front().message);
    return cp;
}

} // namespace memlif
