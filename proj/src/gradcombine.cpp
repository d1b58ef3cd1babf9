#include "pinc/gradcombine.hpp"

#include <algorithm>
#include <cmath>

#include "pinc/errors.hpp"

namespace pinc {

std::string grad_scheme_name(GradScheme s) {
    switch (s) {
        case GradScheme::Sum: return "sum";
        case GradScheme::ConFIG: return "config";
        case GradScheme::Norm: return "norm";
    }
    return "?";
}

GradScheme grad_scheme_from_name(const std::string& name) {
    if (name == "sum") return GradScheme::Sum;
    if (name == "config") return GradScheme::ConFIG;
    if (name == "norm") return GradScheme::Norm;
    throw ConfigError("unknown grad scheme '" + name + "' (expected sum, config or norm)");
}

double vec_dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double vec_norm(std::span<const double> a) { return std::sqrt(vec_dot(a, a)); }

namespace {

void check_lengths(std::span<const GradientVector> grads, const char* who) {
    if (grads.empty()) throw ConfigError(std::string(who) + ": no gradients");
    for (const auto& g : grads) {
        if (g.size() != grads.front().size()) {
            throw ConfigError(std::string(who) + ": gradient length mismatch");
        }
    }
}

/// Eigendecomposition of a small symmetric matrix by cyclic Jacobi rotations.
/// a is n x n row-major and is destroyed; eigenvectors come out in the
/// columns of v.
void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& eigval,
                  std::vector<double>& v) {
    v.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
    auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
    auto V = [&](int i, int j) -> double& { return v[static_cast<std::size_t>(i) * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(A(p, q)) < 1e-300) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    eigval.resize(n);
    for (int i = 0; i < n; ++i) eigval[i] = A(i, i);
}

} // namespace

GradientVector sum_combine(std::span<const GradientVector> grads,
                           std::span<const double> weights) {
    check_lengths(grads, "sum_combine");
    if (weights.size() != grads.size()) {
        throw ConfigError("sum_combine: weight count mismatch");
    }
    GradientVector out(grads.front().size(), 0.0);
    for (std::size_t n = 0; n < grads.size(); ++n) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights[n] * grads[n][i];
    }
    return out;
}

GradientVector config_combine(std::span<const GradientVector> grads) {
    check_lengths(grads, "config_combine");
    const std::size_t dim = grads.front().size();

    // unit-normalize, dropping near-zero gradients
    std::vector<const GradientVector*> kept;
    std::vector<double> norms;
    for (const auto& g : grads) {
        const double n = vec_norm(g);
        if (n > kZeroGradNorm) {
            kept.push_back(&g);
            norms.push_back(n);
        }
    }
    if (kept.empty()) throw NumericError("config_combine: all gradients are zero");
    const int m = static_cast<int>(kept.size());

    // Gram matrix of the unit gradients
    std::vector<double> gram(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            gram[static_cast<std::size_t>(i) * m + j] =
                vec_dot(*kept[i], *kept[j]) / (norms[i] * norms[j]);
        }
    }

    // y = pinv(gram) * 1  via eigendecomposition
    std::vector<double> eigval, eigvec;
    jacobi_eigen(gram, m, eigval, eigvec);
    double max_ev = 0.0;
    for (double ev : eigval) max_ev = std::max(max_ev, std::abs(ev));
    const double cutoff = max_ev * 1e-12;
    std::vector<double> y(m, 0.0);
    for (int k = 0; k < m; ++k) {
        if (std::abs(eigval[k]) <= cutoff) continue;
        double proj = 0.0; // <eigvec_k, 1>
        for (int i = 0; i < m; ++i) proj += eigvec[static_cast<std::size_t>(i) * m + k];
        const double coef = proj / eigval[k];
        for (int i = 0; i < m; ++i) {
            y[i] += coef * eigvec[static_cast<std::size_t>(i) * m + k];
        }
    }

    // direction v = sum_i y_i * unit_g_i
    GradientVector dir(dim, 0.0);
    for (int i = 0; i < m; ++i) {
        const double c = y[i] / norms[i];
        const auto& g = *kept[i];
        for (std::size_t k = 0; k < dim; ++k) dir[k] += c * g[k];
    }
    const double dn = vec_norm(dir);
    if (dn <= kZeroGradNorm) {
        // no conflict-free direction (e.g. exactly opposing gradients)
        return GradientVector(dim, 0.0);
    }

    double proj_sum = 0.0;
    double norm_sum = 0.0;
    for (int i = 0; i < m; ++i) {
        proj_sum += vec_dot(dir, *kept[i]) / (dn * norms[i]);
        norm_sum += norms[i];
    }
    const double magnitude = proj_sum * (norm_sum / static_cast<double>(m));
    for (std::size_t k = 0; k < dim; ++k) dir[k] *= magnitude / dn;
    return dir;
}

GradientVector norm_combine(std::span<const GradientVector> grads,
                            std::span<const double> weights) {
    check_lengths(grads, "norm_combine");
    if (weights.size() != grads.size()) {
        throw ConfigError("norm_combine: weight count mismatch");
    }
    const double ref_norm = vec_norm(grads.front());
    if (ref_norm <= kZeroGradNorm) {
        throw NumericError("norm_combine: reference gradient has zero norm");
    }
    const std::size_t dim = grads.front().size();
    GradientVector sum(dim, 0.0);
    for (std::size_t n = 0; n < grads.size(); ++n) {
        const double gn = vec_norm(grads[n]);
        if (gn <= kZeroGradNorm) continue; // dropped for this step
        const double scale = weights[n] * ref_norm / gn;
        for (std::size_t i = 0; i < dim; ++i) sum[i] += scale * grads[n][i];
    }
    const double sn = vec_norm(sum);
    if (sn <= kZeroGradNorm) {
        throw NumericError("norm_combine: combined gradient cancelled to zero");
    }
    const double scale = ref_norm / sn;
    for (double& x : sum) x *= scale;
    return sum;
}

GradientVector clip_norm(GradientVector g, double c_max) {
    const double n = vec_norm(g);
    if (n > c_max) {
        const double scale = c_max / n;
        for (double& x : g) x *= scale;
    }
    return g;
}

} // namespace pinc
