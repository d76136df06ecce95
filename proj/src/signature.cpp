#include "inknet/signature.hpp"

#include <cmath>

namespace inknet::sigfeat {

std::size_t sig_length(int d, int m) {
    std::size_t len = 0, pw = 1;
    for (int k = 0; k <= m; ++k) {
        len += pw;
        pw *= std::size_t(d);
    }
    return len;
}

std::size_t level_offset(int d, int k) {
    return sig_length(d, k - 1);  // levels 0..k-1 precede level k
}

TruncatedSignature::TruncatedSignature(int d_, int m_) : d(d_), m(m_) {
    if (d < 1 || m < 0) throw ink::DataError("signature: need d >= 1, m >= 0");
    coeffs.assign(sig_length(d, m), 0.0);
    coeffs[0] = 1.0;
}

TruncatedSignature segment_signature(const std::vector<double>& delta, int m) {
    const int d = int(delta.size());
    TruncatedSignature s(d, m);
    for (double v : delta)
        if (!std::isfinite(v)) throw ink::DataError("segment_signature: non-finite increment");

    // Level k entries are (delta tensor-power k)/k!: fill each level from the
    // previous one, appending one index.
    std::size_t prev_off = 0, prev_len = 1;
    for (int k = 1; k <= m; ++k) {
        const std::size_t off = prev_off + prev_len;
        for (std::size_t i = 0; i < prev_len; ++i) {
            const double base = s.coeffs[prev_off + i] / double(k);
            for (int a = 0; a < d; ++a) s.coeffs[off + i * d + a] = base * delta[a];
        }
        prev_off = off;
        prev_len *= d;
    }
    return s;
}

TruncatedSignature chen_concat(const TruncatedSignature& a, const TruncatedSignature& b) {
    if (a.d != b.d || a.m != b.m)
        throw ink::DataError("chen_concat: dimension or depth mismatch");
    const int d = a.d, m = a.m;
    TruncatedSignature out(d, m);

    std::vector<std::size_t> off(m + 1), len(m + 1);
    for (int k = 0; k <= m; ++k) {
        off[k] = level_offset(d, k);
        len[k] = k == 0 ? 1 : len[k - 1] * d;
    }
    for (int k = 0; k <= m; ++k) {
        double* dst = out.coeffs.data() + off[k];
        if (k == 0) {
            dst[0] = a.coeffs[0] * b.coeffs[0];
            continue;
        }
        for (std::size_t z = 0; z < len[k]; ++z) dst[z] = 0.0;
        for (int i = 0; i <= k; ++i) {
            const int j = k - i;
            const double* pa = a.coeffs.data() + off[i];
            const double* pb = b.coeffs.data() + off[j];
            // out[(u,v)] += a_i[u] * b_j[v]; v is the fast (trailing) index.
            for (std::size_t u = 0; u < len[i]; ++u) {
                const double au = pa[u];
                if (au == 0.0) continue;
                double* row = dst + u * len[j];
                for (std::size_t v = 0; v < len[j]; ++v) row[v] += au * pb[v];
            }
        }
    }
    return out;
}

TruncatedSignature path_signature(const std::vector<std::vector<double>>& points, int m) {
    if (points.empty()) throw ink::DataError("path_signature: empty path");
    const int d = int(points[0].size());
    TruncatedSignature acc(d, m);
    std::vector<double> delta(d);
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (int(points[i].size()) != d)
            throw ink::DataError("path_signature: ragged point dimensions");
        for (int a = 0; a < d; ++a) delta[a] = points[i][a] - points[i - 1][a];
        acc = chen_concat(acc, segment_signature(delta, m));
    }
    return acc;
}

// Direct ordered-sum route. Over the refined grid the simplex
// {0 < t_1 < ... < t_k < T} splits by which increment each t_r falls into;
// for non-decreasing increment tuples the within-increment volume of an
// r-fold tie is 1/r!. Folding increments in order gives the update
//   I_k += sum_{r=1..k} I_{k-r} (x) delta^(x r)/r!
// evaluated in place, highest level first. No signature products involved.
TruncatedSignature iterated_sum_oracle(const std::vector<std::vector<double>>& points, int m,
                                       int refine) {
    if (points.empty()) throw ink::DataError("iterated_sum_oracle: empty path");
    if (refine < 1) throw ink::DataError("iterated_sum_oracle: refine must be >= 1");
    const int d = int(points[0].size());

    std::vector<std::size_t> off(m + 1), len(m + 1);
    for (int k = 0; k <= m; ++k) {
        off[k] = level_offset(d, k);
        len[k] = k == 0 ? 1 : len[k - 1] * d;
    }

    TruncatedSignature acc(d, m);
    // Tensor powers of the current increment with 1/r! weights.
    std::vector<std::vector<double>> pw(m + 1);
    for (int r = 0; r <= m; ++r) pw[r].assign(len[r], 0.0);
    pw[0][0] = 1.0;

    std::vector<double> delta(d);
    for (std::size_t seg = 1; seg < points.size(); ++seg) {
        for (int a = 0; a < d; ++a)
            delta[a] = (points[seg][a] - points[seg - 1][a]) / double(refine);
        for (int r = 1; r <= m; ++r)
            for (std::size_t u = 0; u < len[r - 1]; ++u)
                for (int a = 0; a < d; ++a)
                    pw[r][u * d + a] = pw[r - 1][u] * delta[a] / double(r);

        for (int sub = 0; sub < refine; ++sub) {
            for (int k = m; k >= 1; --k) {
                double* dst = acc.coeffs.data() + off[k];
                for (int r = 1; r <= k; ++r) {
                    const double* lo = acc.coeffs.data() + off[k - r];
                    for (std::size_t u = 0; u < len[k - r]; ++u) {
                        const double lu = lo[u];
                        if (lu == 0.0) continue;
                        double* row = dst + u * len[r];
                        for (std::size_t v = 0; v < len[r]; ++v) row[v] += lu * pw[r][v];
                    }
                }
            }
        }
    }
    return acc;
}

}  // namespace inknet::sigfeat
