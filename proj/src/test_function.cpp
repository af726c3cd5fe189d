#include "scbl/test_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scbl {

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Coefficients (ascending powers of t) of the C^k smoothstep on [0, 1].
std::vector<double> smoothstep(int k) {
    std::vector<double> c(2 * k + 2, 0.0);
    for (int n = 0; n <= k; ++n)
        c[k + 1 + n] = binomial(k + n, n) * binomial(2 * k + 1, k - n) * ((n % 2) ? -1.0 : 1.0);
    return c;
}

double poly_derivative(const std::vector<double>& c, double t, int order) {
    double v = 0.0;
    for (int i = static_cast<int>(c.size()) - 1; i >= order; --i) {
        double f = 1.0;
        for (int j = 0; j < order; ++j) f *= i - j;
        v = v * t + c[i] * f;
    }
    return v;
}

double horner(const std::vector<double>& c, double t) {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
    return v;
}

}  // namespace

const char* family_name(Family f) {
    switch (f) {
        case Family::gaussian: return "gaussian";
        case Family::gaussian_poly: return "gaussian_poly";
        case Family::bump: return "bump";
        case Family::exponential: return "exponential";
    }
    return "?";
}

TestFunction make_test_function(const std::vector<TermSpec>& terms) {
    TestFunction f;
    for (const auto& s : terms) {
        if (!std::isfinite(s.weight))
            throw DomainError("functional_calculus", "make_test_function", "weight must be finite");
        switch (s.family) {
            case Family::gaussian:
            case Family::gaussian_poly:
                if (!(s.width > 0.0))
                    throw DomainError("functional_calculus", "make_test_function", "width sigma must be positive");
                if (s.degree < 0 || s.degree > 16)
                    throw DomainError("functional_calculus", "make_test_function", "degree must be in 0..16");
                break;
            case Family::bump:
                if (!(s.lower < s.upper))
                    throw DomainError("functional_calculus", "make_test_function", "bump support needs a < b");
                if (s.smoothness < 1 || s.smoothness > 12)
                    throw DomainError("functional_calculus", "make_test_function", "bump smoothness must be in 1..12");
                break;
            case Family::exponential:
                if (!std::isfinite(s.rate))
                    throw DomainError("functional_calculus", "make_test_function", "rate must be finite");
                break;
        }
        TestFunction::Term t{s, {}};
        if (s.family == Family::gaussian) t.spec.degree = 0;
        if (s.family == Family::bump) t.ramp = smoothstep(s.smoothness);
        f.terms_.push_back(std::move(t));
    }
    return f;
}

TestFunction make_test_function(const TermSpec& term) { return make_test_function(std::vector<TermSpec>{term}); }

TestFunction zero_function() { return TestFunction{}; }

TestFunction gaussian(double center, double width, double weight) {
    TermSpec s;
    s.family = Family::gaussian;
    s.center = center;
    s.width = width;
    s.weight = weight;
    return make_test_function(s);
}

TestFunction exponential(double rate, double weight) {
    TermSpec s;
    s.family = Family::exponential;
    s.rate = rate;
    s.weight = weight;
    return make_test_function(s);
}

TestFunction bump(double lower, double upper, int smoothness, double weight) {
    TermSpec s;
    s.family = Family::bump;
    s.lower = lower;
    s.upper = upper;
    s.smoothness = smoothness;
    s.weight = weight;
    return make_test_function(s);
}

double TestFunction::term_derivative(const Term& t, double x, int order) {
    const TermSpec& s = t.spec;
    if (s.weight == 0.0) return 0.0;
    switch (s.family) {
        case Family::gaussian:
        case Family::gaussian_poly: {
            const double u = (x - s.center) / s.width;
            // d/du (q e^{-u^2/2}) = (q' - u q) e^{-u^2/2}
            std::vector<double> q(s.degree + 1, 0.0);
            q[s.degree] = 1.0;
            for (int k = 0; k < order; ++k) {
                std::vector<double> next(q.size() + 1, 0.0);
                for (std::size_t i = 1; i < q.size(); ++i) next[i - 1] += i * q[i];
                for (std::size_t i = 0; i < q.size(); ++i) next[i + 1] -= q[i];
                q = std::move(next);
            }
            return s.weight * horner(q, u) * std::exp(-0.5 * u * u) / std::pow(s.width, order);
        }
        case Family::bump: {
            if (x <= s.lower || x >= s.upper) return 0.0;
            const double ramp = 0.25 * (s.upper - s.lower);
            if (x < s.lower + ramp)
                return s.weight * poly_derivative(t.ramp, (x - s.lower) / ramp, order) / std::pow(ramp, order);
            if (x > s.upper - ramp) {
                const double sign = (order % 2) ? -1.0 : 1.0;
                return s.weight * sign * poly_derivative(t.ramp, (s.upper - x) / ramp, order) / std::pow(ramp, order);
            }
            return order == 0 ? s.weight : 0.0;
        }
        case Family::exponential:
            return s.weight * std::pow(-s.rate, order) * std::exp(-s.rate * x);
    }
    return 0.0;
}

double TestFunction::term_tail_sup(const Term& t, double x) {
    const TermSpec& s = t.spec;
    const double w = std::abs(s.weight);
    if (w == 0.0) return 0.0;
    switch (s.family) {
        case Family::gaussian:
        case Family::gaussian_poly: {
            const double m = s.degree;
            const double peak = s.center + s.width * std::sqrt(m);
            const double u = std::max((x - s.center) / s.width, 0.0);
            if (x >= peak) return w * std::pow(u, m) * std::exp(-0.5 * u * u);
            return w * (m == 0 ? 1.0 : std::pow(m, 0.5 * m) * std::exp(-0.5 * m));
        }
        case Family::bump: {
            if (x >= s.upper) return 0.0;
            const double ramp = 0.25 * (s.upper - s.lower);
            if (x <= s.upper - ramp) return w;
            return w * horner(t.ramp, (s.upper - x) / ramp);
        }
        case Family::exponential:
            return s.rate >= 0.0 ? w * std::exp(-s.rate * x) : std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double TestFunction::derivative(double x, int order) const {
    if (order < 0) throw DomainError("functional_calculus", "derivative", "negative derivative order");
    double v = 0.0;
    for (const auto& t : terms_) v += term_derivative(t, x, order);
    return v;
}

double TestFunction::tail_sup(double x) const {
    double v = 0.0;
    for (const auto& t : terms_) v += term_tail_sup(t, x);
    return v;
}

bool TestFunction::is_zero() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.spec.weight == 0.0; });
}

bool TestFunction::is_schwartz() const {
    return std::none_of(terms_.begin(), terms_.end(), [](const Term& t) {
        return t.spec.family == Family::exponential && t.spec.weight != 0.0 && t.spec.rate != 0.0;
    });
}

int TestFunction::max_derivative() const {
    int best = 64;
    for (const auto& t : terms_)
        if (t.spec.family == Family::bump) best = std::min(best, t.spec.smoothness);
    return best;
}

std::vector<TermSpec> TestFunction::terms() const {
    std::vector<TermSpec> out;
    for (const auto& t : terms_) out.push_back(t.spec);
    return out;
}

TestFunction TestFunction::scaled(double factor) const {
    TestFunction f = *this;
    for (auto& t : f.terms_) t.spec.weight *= factor;
    return f;
}

TestFunction operator+(const TestFunction& a, const TestFunction& b) {
    TestFunction f = a;
    f.terms_.insert(f.terms_.end(), b.terms_.begin(), b.terms_.end());
    return f;
}

}  // namespace scbl
