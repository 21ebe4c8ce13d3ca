#include "geohall/geostats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>

#include "geohall/error.hpp"

namespace geohall::geostats {

namespace {

void require_finite(const Matrix& x, std::string_view what) {
    if (!x.allFinite()) throw ValueError(std::string(what) + ": non-finite entry");
}

// Rethrows `fn`'s error with the layer prefixed, preserving the error family.
template <class Fn>
auto at_layer(int layer, Fn&& fn) {
    const std::string where = "layer " + std::to_string(layer) + ": ";
    try {
        return fn();
    } catch (const NumericalError& e) {
        throw NumericalError(where + e.what());
    } catch (const DataError& e) {
        throw ValueError(where + e.what());
    }
}

}  // namespace

std::string_view to_string(Statistic s) {
    switch (s) {
        case Statistic::HS: return "HS";
        case Statistic::ME: return "ME";
        case Statistic::AS: return "AS";
    }
    return "?";
}

Statistic parse_statistic(std::string_view s) {
    if (s == "HS") return Statistic::HS;
    if (s == "ME") return Statistic::ME;
    if (s == "AS") return Statistic::AS;
    throw UsageError("unknown statistic '" + std::string(s) + "' (expected HS, ME or AS)");
}

std::string flags_to_string(StatFlags f) {
    std::string out;
    if (f & kClampedEigenvalues) out += "clamped_eigenvalues";
    if (f & kFlooredAttention) out += std::string(out.empty() ? "" : "|") + "floored_attention";
    return out;
}

StatFlags parse_flags(std::string_view s) {
    StatFlags f = kNoFlags;
    while (!s.empty()) {
        const auto bar = s.find('|');
        const auto tok = s.substr(0, bar);
        if (tok == "clamped_eigenvalues") f |= kClampedEigenvalues;
        else if (tok == "floored_attention") f |= kFlooredAttention;
        else throw FormatError("unknown statistic flag '" + std::string(tok) + "'");
        if (bar == std::string_view::npos) break;
        s.remove_prefix(bar + 1);
    }
    return f;
}

namespace {

SpectrumResult symmetric_spectrum(const Eigen::MatrixXd& g, std::size_t m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("gram_spectrum: eigen-solver did not converge");
    SpectrumResult r;
    const auto& ev = eig.eigenvalues();
    r.eigenvalues.assign(m, 0.0);
    std::copy(ev.data(), ev.data() + ev.size(), r.eigenvalues.begin());
    std::sort(r.eigenvalues.begin(), r.eigenvalues.end(), std::greater<>());
    for (auto& v : r.eigenvalues) {
        if (v < 0.0) {
            v = 0.0;
            ++r.clamped_count;
        }
    }
    return r;
}

}  // namespace

SpectrumResult spectrum_from_hidden(const Matrix& hidden) {
    if (hidden.rows() < 1) throw UsageError("gram_spectrum: empty sequence");
    require_finite(hidden, "gram_spectrum");
    const Eigen::MatrixXd h = hidden;
    const auto m = static_cast<std::size_t>(h.rows());
    SpectrumResult r = h.rows() <= h.cols() ? symmetric_spectrum(h * h.transpose(), m)
                                            : symmetric_spectrum(h.transpose() * h, m);
    r.trace_value = h.squaredNorm();
    return r;
}

SpectrumResult spectrum_from_gram(const Matrix& gram) {
    if (gram.rows() < 1) throw UsageError("gram_spectrum: empty sequence");
    if (gram.rows() != gram.cols()) throw UsageError("gram_spectrum: Gram matrix must be square");
    require_finite(gram, "gram_spectrum");
    SpectrumResult r = symmetric_spectrum(gram, static_cast<std::size_t>(gram.rows()));
    r.trace_value = gram.trace();
    return r;
}

ScoredValue hidden_score(const SpectrumResult& spectrum, std::size_t m) {
    if (m == 0 || m != spectrum.eigenvalues.size())
        throw UsageError("hidden_score: m=" + std::to_string(m) + " but " + std::to_string(spectrum.eigenvalues.size()) +
                         " eigenvalues");
    const double lmax = *std::max_element(spectrum.eigenvalues.begin(), spectrum.eigenvalues.end());
    if (!(lmax > 0.0)) throw NumericalError("hidden_score: all-zero spectrum has no log-volume");
    const double floor = kEigenFloorRel * lmax;

    ScoredValue out;
    double sum = 0.0;
    for (double v : spectrum.eigenvalues) {
        if (v < floor) {
            out.flags |= kClampedEigenvalues;
            v = floor;
        }
        sum += std::log(v);
    }
    out.value = sum / static_cast<double>(m);
    return out;
}

double matrix_entropy(const SpectrumResult& spectrum) {
    double total = 0.0;
    for (double v : spectrum.eigenvalues) total += v;
    if (!(total > 0.0) || !(spectrum.trace_value > 0.0)) throw NumericalError("matrix_entropy: zero trace");
    double h = 0.0;
    for (double v : spectrum.eigenvalues) {
        if (v <= 0.0) continue;
        const double q = v / total;
        h -= q * std::log(q);
    }
    return h;
}

ScoredValue attention_score(const Matrix& diag) {
    if (diag.size() == 0) throw UsageError("attention_score: empty attention diagonal");
    require_finite(diag, "attention_score");
    if (diag.minCoeff() < 0.0 || diag.maxCoeff() > 1.0)
        throw ValueError("attention_score: diagonal entries must lie in [0, 1]");

    ScoredValue out;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < diag.rows(); ++i) {
        for (Eigen::Index j = 0; j < diag.cols(); ++j) {
            double v = diag(i, j);
            if (v < kAttentionFloor) {
                out.flags |= kFlooredAttention;
                v = kAttentionFloor;
            }
            sum += std::log(v);
        }
    }
    out.value = sum / static_cast<double>(diag.size());
    return out;
}

std::vector<LayerStatProfile> stats_profiles(const trace::ActivationTrace& trace,
                                             std::span<const Statistic> statistics, std::optional<Span> span) {
    const auto m = static_cast<std::size_t>(trace.seq_len());
    Span s = span.value_or(Span{0, m});
    if (s.start >= s.end || s.end > m)
        throw UsageError("stats_profile: span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                         ") not a non-empty subrange of [0, " + std::to_string(m) + ")");
    const auto start = static_cast<Eigen::Index>(s.start);
    const auto len = static_cast<Eigen::Index>(s.end - s.start);
    const bool spectral = std::any_of(statistics.begin(), statistics.end(),
                                      [](Statistic st) { return st != Statistic::AS; });

    std::vector<LayerStatProfile> out(statistics.size());
    for (std::size_t k = 0; k < statistics.size(); ++k) {
        out[k].record_id = trace.record_id;
        out[k].statistic = std::string(to_string(statistics[k]));
    }
    for (int l = 0; l < trace.num_layers(); ++l) {
        const auto li = static_cast<std::size_t>(l);
        at_layer(l, [&] {
            std::optional<SpectrumResult> spec;
            if (spectral) {
                const auto& x = trace.layers[li];
                spec = trace.payload_kind == trace::PayloadKind::hidden
                           ? spectrum_from_hidden(x.middleRows(start, len))
                           : spectrum_from_gram(x.block(start, start, len, len));
            }
            for (std::size_t k = 0; k < statistics.size(); ++k) {
                ScoredValue v;
                switch (statistics[k]) {
                    case Statistic::HS: v = hidden_score(*spec, static_cast<std::size_t>(len)); break;
                    case Statistic::ME: v = {matrix_entropy(*spec), kNoFlags}; break;
                    case Statistic::AS: v = attention_score(trace.attn_diag[li].middleCols(start, len)); break;
                }
                out[k].values.push_back(v.value);
                out[k].flags.push_back(v.flags);
            }
            return 0;
        });
    }
    return out;
}

LayerStatProfile stats_profile(const trace::ActivationTrace& trace, Statistic statistic, std::optional<Span> span) {
    const Statistic one[] = {statistic};
    return std::move(stats_profiles(trace, one, span).front());
}

}  // namespace geohall::geostats
