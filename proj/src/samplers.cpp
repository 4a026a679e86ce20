#include "bnmr/samplers.hpp"

#include "bnmr/errors.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bnmr {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
// Standardized bound beyond which the exponential-proposal rejection sampler is used.
constexpr double kTailThreshold = 4.0;

// log(1 - exp(x)) for x <= 0.
double log1mexp(double x) {
    if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
    return std::log1p(-std::exp(x));
}

// Phi^{-1}(p) for p in (0, 1); accurate in the lower tail.
double normal_quantile(double p) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double upper_tail_rejection(double a, double b, Rng& rng) {
    // Robert (1995) translated-exponential proposal on (a, inf), accepting only
    // draws below b; for narrow intervals a uniform proposal is more efficient.
    const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
    if (std::isfinite(b) && rate * (b - a) < 1.0) {
        for (;;) {
            const double z = a + (b - a) * sample_uniform(rng);
            if (std::log(sample_uniform(rng)) < 0.5 * (a * a - z * z)) return z;
        }
    }
    for (;;) {
        const double z = a - std::log(sample_uniform(rng)) / rate;
        if (z >= b) continue;
        const double d = z - rate;
        if (std::log(sample_uniform(rng)) < -0.5 * d * d) return z;
    }
}

double inverse_cdf_draw(double a, double b, Rng& rng) {
    // Both lower- and upper-tail masses are formed directly so neither side loses
    // precision to 1 - p cancellation.
    const double u = sample_uniform(rng);
    const double pa = std::exp(log_normal_cdf(a));
    const double pb = std::exp(log_normal_cdf(b));
    const double mass = pb - pa;
    const double p = pa + u * mass;
    if (p < 0.5) return normal_quantile(p);
    const double qb = std::exp(log_normal_cdf(-b));
    const double q = qb + (1.0 - u) * mass;
    return -normal_quantile(q);
}

double standard_truncated_draw(double a, double b, Rng& rng) {
    if (a == -kInf && b == kInf) return sample_standard_normal(rng);
    if (a >= kTailThreshold) return upper_tail_rejection(a, b, rng);
    if (b <= -kTailThreshold) return -upper_tail_rejection(-b, -a, rng);
    return inverse_cdf_draw(a, b, rng);
}

}  // namespace

void TruncatedNormalSpec::validate() const {
    if (!(sd > 0.0) || !std::isfinite(sd)) {
        throw std::invalid_argument("truncated normal sd must be positive, got " + std::to_string(sd));
    }
    if (!std::isfinite(mean)) throw std::invalid_argument("truncated normal mean must be finite");
    if (!(lower < upper)) {
        throw std::invalid_argument("truncated normal requires lower < upper");
    }
}

double log_normal_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

double log_normal_cdf(double z) {
    if (z == kInf) return 0.0;
    if (z == -kInf) return -kInf;
    if (z > -30.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
    // Asymptotic Mills-ratio series: Phi(z) = phi(z)/|z| * sum_k (-1)^k (2k-1)!! / z^{2k}.
    const double z2 = z * z;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 12; ++k) {
        term *= -(2.0 * k - 1.0) / z2;
        sum += term;
    }
    return log_normal_pdf(z) - std::log(-z) + std::log(sum);
}

double log_normal_interval(double a, double b) {
    if (!(a < b)) return -kInf;
    // Work on the side where both CDF values are small.
    if (a > 0.0) {
        const double lo = -b;
        b = -a;
        a = lo;
    }
    const double lb = log_normal_cdf(b);
    const double la = log_normal_cdf(a);
    if (la == -kInf) return lb;
    return lb + log1mexp(la - lb);
}

double sample_truncated_normal(const TruncatedNormalSpec& spec, Rng& rng) {
    spec.validate();
    const double a = (spec.lower - spec.mean) / spec.sd;
    const double b = (spec.upper - spec.mean) / spec.sd;
    double x = spec.mean + spec.sd * standard_truncated_draw(a, b, rng);
    // Rounding in the affine map can land exactly on a bound.
    if (!(x > spec.lower)) x = std::nextafter(spec.lower, kInf);
    if (!(x < spec.upper)) x = std::nextafter(spec.upper, -kInf);
    if (!(x > spec.lower && x < spec.upper)) {
        throw SamplerError("truncated normal draw outside its support");
    }
    return x;
}

TruncatedMoments truncated_normal_moments(const TruncatedNormalSpec& spec) {
    spec.validate();
    const double a = (spec.lower - spec.mean) / spec.sd;
    const double b = (spec.upper - spec.mean) / spec.sd;
    const double log_z = log_normal_interval(a, b);
    // Ratios phi(bound)/Z in log space; an infinite bound contributes zero.
    const double ra = std::isfinite(a) ? std::exp(log_normal_pdf(a) - log_z) : 0.0;
    const double rb = std::isfinite(b) ? std::exp(log_normal_pdf(b) - log_z) : 0.0;
    const double ta = std::isfinite(a) ? a * ra : 0.0;
    const double tb = std::isfinite(b) ? b * rb : 0.0;
    const double shift = ra - rb;
    double var_std = 1.0 + ta - tb - shift * shift;
    if (var_std < 0.0) var_std = 0.0;
    return {spec.mean + spec.sd * shift, spec.sd * spec.sd * var_std, log_z};
}

Eigen::VectorXd sample_truncated_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& precision,
                                     const Eigen::VectorXd& lower_bounds,
                                     const Eigen::VectorXd& start, Rng& rng, int sweeps) {
    const Eigen::Index d = mean.size();
    if (precision.rows() != d || precision.cols() != d || lower_bounds.size() != d ||
        start.size() != d) {
        throw std::invalid_argument("sample_truncated_mvn: dimension mismatch");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
        throw SamplerError("truncated MVN precision is not positive definite");
    }
    Eigen::VectorXd x = start;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (!(x(j) > lower_bounds(j))) {
            x(j) = std::isfinite(lower_bounds(j)) ? std::max(lower_bounds(j) + 1e-8, mean(j))
                                                  : mean(j);
        }
    }
    for (int s = 0; s < sweeps; ++s) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double qjj = precision(j, j);
            // Conditional mean: m_j - sum_{l != j} Q_jl (x_l - m_l) / Q_jj.
            const double cross = precision.row(j).dot(x - mean) - qjj * (x(j) - mean(j));
            TruncatedNormalSpec spec{mean(j) - cross / qjj, 1.0 / std::sqrt(qjj), lower_bounds(j),
                                     kInf};
            x(j) = sample_truncated_normal(spec, rng);
        }
    }
    return x;
}

double sample_gamma(double shape, double rate, Rng& rng) {
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw std::invalid_argument("gamma parameters must be positive (shape=" +
                                    std::to_string(shape) + ", rate=" + std::to_string(rate) + ")");
    }
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    double g = dist(rng);
    // Tiny shapes can underflow to exactly zero.
    if (g <= 0.0) g = std::numeric_limits<double>::min();
    return g;
}

double sample_beta(double a, double b, Rng& rng) {
    const double x = sample_gamma(a, 1.0, rng);
    const double y = sample_gamma(b, 1.0, rng);
    return x / (x + y);
}

double sample_standard_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

double sample_uniform(Rng& rng) {
    // 53-bit mantissa, shifted off zero.
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace bnmr
