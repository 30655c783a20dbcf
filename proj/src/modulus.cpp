#include "freqlab/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "freqlab/errors.hpp"

namespace freqlab {

namespace {

double integrate(const std::function<double(double)>& f, double a, double b) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-12);
}

// Least-squares slope of ys against xs.
double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

OsgoodVerdict analytic_osgood(const Modulus& m) {
    switch (m.kind()) {
        case ModulusKind::Linear: return OsgoodVerdict::Osgood;
        case ModulusKind::Power: return OsgoodVerdict::NonOsgood;
        case ModulusKind::LogPower: return m.p() <= 1.0 ? OsgoodVerdict::Osgood : OsgoodVerdict::NonOsgood;
        case ModulusKind::Tabulated: break;
    }
    return OsgoodVerdict::Inconclusive;
}

}  // namespace

Modulus Modulus::linear() {
    Modulus m;
    m.kind_ = ModulusKind::Linear;
    return m;
}

Modulus Modulus::power(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("power modulus needs alpha in (0,1)");
    Modulus m;
    m.kind_ = ModulusKind::Power;
    m.alpha_ = alpha;
    return m;
}

Modulus Modulus::log_power(double p) {
    if (!(p > 0.0)) throw DomainError("log-power modulus needs p > 0");
    Modulus m;
    m.kind_ = ModulusKind::LogPower;
    m.p_ = p;
    m.t_cut_ = std::exp(-p);
    m.omega_cut_ = m.t_cut_ * std::pow(p, p);
    return m;
}

Modulus Modulus::tabulated(std::vector<std::pair<double, double>> samples) {
    if (samples.size() < 2) throw DomainError("tabulated modulus needs at least two samples");
    std::sort(samples.begin(), samples.end());
    if (samples.front().first == 0.0) samples.erase(samples.begin());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto [t, w] = samples[i];
        if (!(t > 0.0 && t <= 1.0) || !(w >= 0.0) || !std::isfinite(w))
            throw DomainError("tabulated modulus sample outside (0,1] x [0,inf)");
        if (i > 0 && (t == samples[i - 1].first || w < samples[i - 1].second))
            throw DomainError("tabulated modulus samples must be strictly increasing in t and nondecreasing in omega");
    }
    // concavity on consecutive triples, origin included
    std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
    pts.insert(pts.end(), samples.begin(), samples.end());
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        const double s0 = (pts[i].second - pts[i - 1].second) / (pts[i].first - pts[i - 1].first);
        const double s1 = (pts[i + 1].second - pts[i].second) / (pts[i + 1].first - pts[i].first);
        if (s1 > s0 * (1.0 + 1e-9) + 1e-15)
            throw DomainError("tabulated modulus is not concave near t=" + std::to_string(pts[i].first));
    }
    Modulus m;
    m.kind_ = ModulusKind::Tabulated;
    m.samples_ = std::move(samples);
    return m;
}

double Modulus::omega(double t) const {
    if (t <= 0.0) return 0.0;
    switch (kind_) {
        case ModulusKind::Linear: return t;
        case ModulusKind::Power: return std::pow(t, alpha_);
        case ModulusKind::LogPower:
            if (t >= t_cut_) return omega_cut_;
            return t * std::pow(-std::log(t), p_);
        case ModulusKind::Tabulated: break;
    }
    const auto& s = samples_;
    if (t >= s.back().first) return s.back().second;
    if (t <= s.front().first) {
        // power-law extrapolation with the first segment's log-log slope
        const auto [t0, w0] = s[0];
        const auto [t1, w1] = s[1];
        if (w0 == 0.0) return 0.0;
        const double slope = std::log(w1 / w0) / std::log(t1 / t0);
        return w0 * std::pow(t / t0, std::max(slope, 0.0));
    }
    auto it = std::upper_bound(s.begin(), s.end(), t,
                               [](double v, const std::pair<double, double>& e) { return v < e.first; });
    const auto [t1, w1] = *it;
    const auto [t0, w0] = *(it - 1);
    if (w0 == 0.0) return w1 * (t - t0) / (t1 - t0);
    const double lam = std::log(t / t0) / std::log(t1 / t0);
    return w0 * std::pow(w1 / w0, lam);
}

const char* to_string(ModulusKind kind) {
    switch (kind) {
        case ModulusKind::Linear: return "linear";
        case ModulusKind::Power: return "power";
        case ModulusKind::LogPower: return "log_power";
        case ModulusKind::Tabulated: return "tabulated";
    }
    return "?";
}

nlohmann::json Modulus::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    switch (kind_) {
        case ModulusKind::Linear: j["params"] = nlohmann::json::object(); break;
        case ModulusKind::Power: j["params"] = {{"alpha", alpha_}}; break;
        case ModulusKind::LogPower:
            j["params"] = {{"p", p_}};
            j["t_cut"] = t_cut_;
            j["extension"] = "constant_past_t_cut";
            break;
        case ModulusKind::Tabulated: {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& [t, w] : samples_) arr.push_back({t, w});
            j["params"] = {{"samples", arr}};
            break;
        }
    }
    return j;
}

Modulus Modulus::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("modulus: missing 'kind'");
    for (const auto& [key, _] : j.items())
        if (key != "kind" && key != "params" && key != "t_cut" && key != "extension")
            throw ConfigError("modulus: unknown key '" + key + "'");
    const std::string kind = j.at("kind").get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    auto need = [&](const char* name) {
        if (!params.contains(name)) throw ConfigError(std::string("modulus.params: missing '") + name + "'");
        return params.at(name);
    };
    auto only = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [key, _] : params.items())
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
                throw ConfigError("modulus.params: unknown key '" + key + "'");
    };
    if (kind == "linear") {
        only({});
        return linear();
    }
    if (kind == "power") {
        only({"alpha"});
        return power(need("alpha").get<double>());
    }
    if (kind == "log_power") {
        only({"p"});
        return log_power(need("p").get<double>());
    }
    if (kind == "tabulated") {
        only({"samples"});
        std::vector<std::pair<double, double>> s;
        for (const auto& e : need("samples")) s.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
        return tabulated(std::move(s));
    }
    throw ConfigError("modulus: unknown kind '" + kind + "'");
}

double eval_phi(const Modulus& m, double s) {
    if (!(s > 0.0)) throw DomainError("phi: s must be positive");
    if (m.kind() == ModulusKind::Linear) return 1.0;
    return m.omega(std::min(s, 1.0)) / s;
}

double eval_psi(const Modulus& m, double s) {
    if (!(s >= 1.0)) throw DomainError("psi: s must be >= 1");
    return eval_phi(m, 1.0 / s);
}

const char* to_string(OsgoodVerdict v) {
    switch (v) {
        case OsgoodVerdict::Osgood: return "Osgood";
        case OsgoodVerdict::NonOsgood: return "NonOsgood";
        case OsgoodVerdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

OsgoodVerdict classify_increments(const std::vector<double>& d, double* decay_exponent, double* tail_ratio,
                                  double* tail_estimate) {
    const std::size_t K = d.size();
    const std::size_t lo = K / 2;
    std::vector<double> xs, ys;
    double ratio_sum = 0.0;
    int ratio_count = 0;
    for (std::size_t k = lo; k < K; ++k) {
        if (d[k] <= 0.0) continue;
        xs.push_back(std::log(static_cast<double>(k + 1)));
        ys.push_back(std::log(d[k]));
        if (k + 1 < K && d[k + 1] > 0.0) {
            ratio_sum += d[k + 1] / d[k];
            ++ratio_count;
        }
    }
    const double total = std::accumulate(d.begin(), d.end(), 0.0);
    double q = 0.0;
    if (xs.size() >= 3) q = -ls_slope(xs, ys);
    const double r = ratio_count > 0 ? ratio_sum / ratio_count : 0.0;
    if (decay_exponent) *decay_exponent = q;
    if (tail_ratio) *tail_ratio = r;

    const double last = d.back();
    double tail = 0.0;
    if (last > 0.0) {
        if (r > 0.0 && r < 0.9) tail = last * r / (1.0 - r);
        else if (q > 1.0) tail = last * static_cast<double>(K) / (q - 1.0);
        else tail = INFINITY;
    }
    if (tail_estimate) *tail_estimate = tail;

    if (last <= 1e-8 * total) return OsgoodVerdict::NonOsgood;
    if (q <= 1.1) return OsgoodVerdict::Osgood;
    if (q >= 1.25 || (r > 0.0 && r < 0.9)) return OsgoodVerdict::NonOsgood;
    return OsgoodVerdict::Inconclusive;
}

OsgoodReport classify_osgood(const Modulus& m, int depth) {
    if (depth < 4) throw DomainError("classify_osgood: depth must be >= 4");
    if (m.kind() == ModulusKind::Tabulated && m.omega(std::ldexp(1.0, -depth - 1)) <= 0.0)
        throw DomainError("classify_osgood: tabulated modulus vanishes on an interval");
    OsgoodReport rep;
    std::vector<double> d;
    double acc = 0.0;
    for (int k = 0; k < depth; ++k) {
        const double a = std::ldexp(1.0, -k - 1), b = std::ldexp(1.0, -k);
        const double inc = integrate([&](double t) { return 1.0 / m.omega(t); }, a, b);
        d.push_back(inc);
        acc += inc;
        rep.partial_integrals.push_back(acc);
    }
    rep.numeric_verdict = classify_increments(d, &rep.decay_exponent, &rep.tail_ratio, nullptr);
    rep.verdict = rep.numeric_verdict;
    if (m.is_parametric()) {
        rep.verdict = analytic_osgood(m);
        rep.analytic_override = true;
    }
    return rep;
}

nlohmann::json OsgoodReport::to_json() const {
    return {{"verdict", to_string(verdict)},
            {"numeric_verdict", to_string(numeric_verdict)},
            {"analytic_override", analytic_override},
            {"decay_exponent", decay_exponent},
            {"tail_ratio", tail_ratio},
            {"partial_integrals", partial_integrals}};
}

nlohmann::json SubmultiplicativeReport::to_json() const {
    return {{"holds", holds}, {"worst_ratio", worst_ratio}, {"constant", constant}, {"samples", samples}};
}

namespace {

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo * std::pow(hi / lo, n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

}  // namespace

SubmultiplicativeReport check_submultiplicative_psi(const Modulus& m, double C_M, std::size_t sample_count,
                                                    double lower) {
    if (sample_count < 16) throw DomainError("check_submultiplicative_psi: sample_count must be >= 16");
    if (!(lower >= 1.0 && lower < 1e6)) throw DomainError("check_submultiplicative_psi: lower must be in [1,1e6)");
    const auto g = log_grid(lower, 1e6, sample_count);
    SubmultiplicativeReport rep;
    rep.constant = C_M;
    for (double x : g)
        for (double y : g) {
            const double ratio = eval_psi(m, x * y) / (eval_psi(m, x) * eval_psi(m, y));
            rep.worst_ratio = std::max(rep.worst_ratio, ratio);
            ++rep.samples;
        }
    rep.holds = rep.worst_ratio <= C_M;
    return rep;
}

SubmultiplicativeReport check_phi_submultiplicative(const Modulus& m, double C, std::size_t sample_count) {
    if (!(C > 1.0)) throw DomainError("check_phi_submultiplicative: C must exceed 1");
    if (sample_count < 16) throw DomainError("check_phi_submultiplicative: sample_count must be >= 16");
    const auto g = log_grid(1e-12, 1.0 / C, sample_count);
    SubmultiplicativeReport rep;
    rep.constant = C;
    for (double s : g)
        for (double t : g) {
            const double ratio = eval_phi(m, s * t) / (eval_phi(m, s) * eval_phi(m, t));
            rep.worst_ratio = std::max(rep.worst_ratio, ratio);
            ++rep.samples;
        }
    rep.holds = rep.worst_ratio <= C;
    return rep;
}

nlohmann::json IntegrabilityReport::to_json() const {
    return {{"finite", finite}, {"value_or_bound", value_or_bound}, {"partial_integrals", partial_integrals}};
}

IntegrabilityReport check_phi_integrable(const Modulus& m, int depth) {
    if (depth < 4) throw DomainError("check_phi_integrable: depth must be >= 4");
    IntegrabilityReport rep;
    std::vector<double> d;
    double acc = 0.0;
    for (int k = 0; k < depth; ++k) {
        const double a = std::ldexp(1.0, -k - 1), b = std::ldexp(1.0, -k);
        const double inc = integrate([&](double s) { return eval_phi(m, s); }, a, b);
        d.push_back(inc);
        acc += inc;
        rep.partial_integrals.push_back(acc);
    }
    double tail = 0.0;
    const OsgoodVerdict v = classify_increments(d, nullptr, nullptr, &tail);
    // a convergent sequence of increments means the integral is finite
    rep.finite = v == OsgoodVerdict::NonOsgood;
    rep.value_or_bound = rep.finite ? acc + tail : acc;
    return rep;
}

bool ExponentTriple::valid() const {
    return beta > 2.0 / 3.0 && tau > 0.0 && tau < 1.0 && eta > 0.0 && eta < 1.0 &&
           tau * (2.0 - beta) + eta < 1.0 && beta * tau > 0.5 + 2.0 * eta;
}

nlohmann::json ExponentTriple::to_json() const {
    return {{"beta", beta}, {"tau", tau}, {"eta", eta}, {"valid", valid()}};
}

ExponentTriple select_exponents(double alpha) {
    if (!(alpha > 2.0 / 3.0 && alpha <= 1.0)) throw DomainError("select_exponents: alpha must lie in (2/3, 1]");
    ExponentTriple e;
    e.beta = (2.0 / 3.0 + alpha) / 2.0;
    const double width = (3.0 * e.beta - 2.0) / (2.0 * (2.0 - e.beta));
    if (width < 1e-4) throw DomainError("select_exponents: feasible interval for tau*beta is numerically empty");
    const double tau_beta = 0.5 * (0.5 + e.beta / (2.0 - e.beta));
    e.tau = tau_beta / e.beta;
    const double slack1 = 1.0 - e.tau * (2.0 - e.beta);
    const double slack2 = e.beta * e.tau - 0.5;
    e.eta = std::min(slack1, slack2) / 4.0;
    if (!e.valid()) throw DomainError("select_exponents: construction produced an invalid triple");
    return e;
}

}  // namespace freqlab
