#include "kmeans.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>

#include "distance.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace lcd {

namespace {

constexpr std::size_t kChunk = 2048;
// Relative slack on the pruning tests; covers float rounding of the bounds.
constexpr double kBoundSlack = 1e-5;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Centroids kept twice: exact doubles for refinement and a transposed float
// copy (dim x k) so the scan over all centroids vectorizes across k.
class CentroidTable {
public:
    CentroidTable(std::size_t k, std::size_t dim) : k_(k), dim_(dim), t_(k * dim), exact_(k * dim) {}

    void assign(const std::vector<double>& centroids) {
        exact_ = centroids;
        for (std::size_t c = 0; c < k_; ++c)
            for (std::size_t d = 0; d < dim_; ++d)
                t_[d * k_ + c] = static_cast<float>(centroids[c * dim_ + d]);
    }

    std::size_t k() const { return k_; }
    std::size_t dim() const { return dim_; }
    const float* column_block(std::size_t d) const { return t_.data() + d * k_; }
    std::span<const double> exact(std::size_t c) const { return {exact_.data() + c * dim_, dim_}; }

private:
    std::size_t k_;
    std::size_t dim_;
    std::vector<float> t_;
    std::vector<double> exact_;
};

struct NearestTwo {
    std::uint32_t best = 0;
    double best_d2 = 0.0;
    double second_d2 = kInf;
};

NearestTwo nearest_two(std::span<const float> x, const CentroidTable& table, std::vector<float>& scratch) {
    const std::size_t k = table.k();
    const std::size_t dim = table.dim();
    scratch.assign(k, 0.0f);
    float* acc = scratch.data();
    for (std::size_t d = 0; d < dim; ++d) {
        const float xd = x[d];
        const float* col = table.column_block(d);
        for (std::size_t c = 0; c < k; ++c) {
            const float diff = xd - col[c];
            acc[c] += diff * diff;
        }
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
        if (acc[c] < acc[best]) best = c;
    float second = std::numeric_limits<float>::infinity();
    for (std::size_t c = 0; c < k; ++c)
        if (c != best && acc[c] < second) second = acc[c];

    // Near ties are settled in double so the lowest-index rule is not at the
    // mercy of float accumulation order.
    const double window = std::max(1e-4, 8.0 * static_cast<double>(dim) * FLT_EPSILON);
    const double threshold = static_cast<double>(acc[best]) * (1.0 + window) + 1e-30;
    NearestTwo out;
    if (k > 1 && static_cast<double>(second) <= threshold) {
        out.best_d2 = kInf;
        for (std::size_t c = 0; c < k; ++c) {
            double e;
            if (static_cast<double>(acc[c]) <= threshold) {
                e = squared_distance(x, table.exact(c));
            } else {
                e = acc[c];
            }
            if (e < out.best_d2) {
                out.second_d2 = out.best_d2;
                out.best_d2 = e;
                out.best = static_cast<std::uint32_t>(c);
            } else if (e < out.second_d2) {
                out.second_d2 = e;
            }
        }
        return out;
    }
    out.best = static_cast<std::uint32_t>(best);
    out.best_d2 = acc[best];
    out.second_d2 = k > 1 ? static_cast<double>(second) : kInf;
    return out;
}

double feature_range(MatrixView data) {
    double widest = 0.0;
    for (std::size_t d = 0; d < data.cols; ++d) {
        float lo = std::numeric_limits<float>::infinity();
        float hi = -lo;
        for (std::size_t i = 0; i < data.rows; ++i) {
            const float v = data.values[i * data.cols + d];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        widest = std::max(widest, static_cast<double>(hi) - static_cast<double>(lo));
    }
    return widest;
}

double assignment_sse(MatrixView data, const CentroidTable& table,
                      const std::vector<std::int32_t>& labels, unsigned threads) {
    const std::size_t chunks = (data.rows + kChunk - 1) / kChunk;
    std::vector<double> partial(chunks, 0.0);
    parallel_for(data.rows, kChunk, threads, [&](std::size_t begin, std::size_t end) {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i)
            s += squared_distance(data.row(i), table.exact(static_cast<std::size_t>(labels[i])));
        partial[begin / kChunk] = s;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

struct Bounds {
    std::vector<std::int32_t> labels;
    std::vector<double> upper;  // >= distance to own centroid
    std::vector<double> lower;  // <= distance to every other centroid
};

void full_assign(MatrixView data, const CentroidTable& table, Bounds& b, unsigned threads) {
    parallel_for(data.rows, kChunk, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<float> scratch;
        for (std::size_t i = begin; i < end; ++i) {
            const auto nt = nearest_two(data.row(i), table, scratch);
            b.labels[i] = static_cast<std::int32_t>(nt.best);
            b.upper[i] = std::sqrt(nt.best_d2);
            b.lower[i] = std::sqrt(nt.second_d2);
        }
    });
}

// Per-centroid neighbours sorted by distance, plus half the distance to the
// nearest one.
struct CentroidGeometry {
    std::size_t k = 0;
    std::vector<double> half_gap;
    std::vector<std::uint32_t> neighbour;  // k rows of k-1 ids
    std::vector<double> neighbour_dist;

    CentroidGeometry(const std::vector<double>& centroids, std::size_t k_, std::size_t dim)
        : k(k_), half_gap(k_, kInf), neighbour(k_ * (k_ - 1)), neighbour_dist(k_ * (k_ - 1)) {
        std::vector<double> dist(k * k, 0.0);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t c = a + 1; c < k; ++c) {
                double s = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double diff = centroids[a * dim + d] - centroids[c * dim + d];
                    s += diff * diff;
                }
                dist[a * k + c] = dist[c * k + a] = std::sqrt(s);
            }
        }
        std::vector<std::uint32_t> ids;
        for (std::size_t a = 0; a < k; ++a) {
            ids.clear();
            for (std::size_t c = 0; c < k; ++c)
                if (c != a) ids.push_back(static_cast<std::uint32_t>(c));
            const double* row = dist.data() + a * k;
            std::sort(ids.begin(), ids.end(), [row](std::uint32_t x, std::uint32_t y) {
                return row[x] != row[y] ? row[x] < row[y] : x < y;
            });
            for (std::size_t j = 0; j < ids.size(); ++j) {
                neighbour[a * (k - 1) + j] = ids[j];
                neighbour_dist[a * (k - 1) + j] = row[ids[j]];
            }
            if (k > 1) half_gap[a] = 0.5 * neighbour_dist[a * (k - 1)];
        }
    }
};

// Hamerly's bound test: a point whose upper bound is below both half the gap
// from its centroid to the nearest other centroid and its lower bound cannot
// change label, so the O(k d) scan is skipped. Otherwise only centroids
// within twice the point's distance of its own centroid can be nearer.
void bounded_assign(MatrixView data, const CentroidTable& table, const CentroidGeometry& geo,
                    Bounds& b, unsigned threads) {
    const std::size_t k = table.k();
    const std::size_t full_scan_at = std::max<std::size_t>(8, k / 4);
    parallel_for(data.rows, kChunk, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<float> scratch;
        for (std::size_t i = begin; i < end; ++i) {
            const auto a = static_cast<std::size_t>(b.labels[i]);
            const double m = std::max(geo.half_gap[a], b.lower[i]) * (1.0 - kBoundSlack);
            if (b.upper[i] < m) continue;
            const auto x = data.row(i);
            const double own = squared_distance(x, table.exact(a));
            const double u = std::sqrt(own);
            b.upper[i] = u;
            if (u < m) continue;

            const double reach = 2.0 * u * (1.0 + kBoundSlack);
            const double* nd = geo.neighbour_dist.data() + a * (k - 1);
            const std::size_t count =
                static_cast<std::size_t>(std::upper_bound(nd, nd + (k - 1), reach) - nd);
            if (count >= full_scan_at) {
                const auto nt = nearest_two(x, table, scratch);
                b.labels[i] = static_cast<std::int32_t>(nt.best);
                b.upper[i] = std::sqrt(nt.best_d2);
                b.lower[i] = std::sqrt(nt.second_d2);
                continue;
            }
            const std::uint32_t* nb = geo.neighbour.data() + a * (k - 1);
            std::size_t best = a;
            double best_d2 = own;
            double second_d2 = kInf;
            for (std::size_t j = 0; j < count; ++j) {
                const std::size_t c = nb[j];
                const double e = squared_distance(x, table.exact(c));
                if (e < best_d2 || (e == best_d2 && c < best)) {
                    second_d2 = best_d2;
                    best_d2 = e;
                    best = c;
                } else if (e < second_d2) {
                    second_d2 = e;
                }
            }
            double lower = std::sqrt(second_d2);
            if (count < k - 1) lower = std::min(lower, std::max(0.0, nd[count] - u));
            b.labels[i] = static_cast<std::int32_t>(best);
            b.upper[i] = std::sqrt(best_d2);
            b.lower[i] = lower;
        }
    });
}

std::vector<double> sampled_seeds(MatrixView data, std::size_t k, Rng& rng) {
    std::vector<std::uint32_t> idx(data.rows);
    std::iota(idx.begin(), idx.end(), 0u);
    std::vector<double> centroids(k * data.cols);
    for (std::size_t c = 0; c < k; ++c) {
        const auto j = c + uniform_index(rng, data.rows - c);
        std::swap(idx[c], idx[j]);
        const auto r = data.row(idx[c]);
        std::copy(r.begin(), r.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * data.cols));
    }
    return centroids;
}

// Greedy D^2 seeding: each step draws 2 + floor(ln k) candidates with
// probability proportional to the squared distance to the nearest seed and
// keeps the one that lowers the total potential most. The nearest and
// second-nearest squared distances tracked while seeding double as the
// initial assignment and bounds.
std::vector<double> plusplus_seeds(MatrixView data, std::size_t k, Rng& rng, Bounds& b,
                                   unsigned threads) {
    const std::size_t n = data.rows;
    const std::size_t dim = data.cols;
    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<double> centroids(k * dim);
    std::vector<double> best(n, kInf);
    std::vector<double> second(n, kInf);
    std::vector<double> cum(n);
    std::vector<std::vector<double>> cand_d2(trials, std::vector<double>(n));
    std::vector<double> partial(chunks);

    // Distances from every row to row `point`; returns the potential if it were added.
    auto evaluate = [&](std::size_t point, std::vector<double>& d2) {
        const float* center = data.row(point).data();
        parallel_for(n, kChunk, threads, [&](std::size_t begin, std::size_t end) {
            double s = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                d2[i] = squared_distance_fast(data.row(i).data(), center, dim);
                s += std::min(best[i], d2[i]);
            }
            partial[begin / kChunk] = s;
        });
        double total = 0.0;
        for (double p : partial) total += p;
        return total;
    };
    auto take = [&](std::size_t c, std::size_t point, const std::vector<double>& d2) {
        const auto r = data.row(point);
        std::copy(r.begin(), r.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] < best[i]) {
                second[i] = best[i];
                best[i] = d2[i];
                b.labels[i] = static_cast<std::int32_t>(c);
            } else if (d2[i] < second[i]) {
                second[i] = d2[i];
            }
        }
    };

    const std::size_t first = uniform_index(rng, n);
    evaluate(first, cand_d2[0]);
    take(0, first, cand_d2[0]);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += best[i];
            cum[i] = total;
        }
        std::vector<std::size_t> picks;
        if (total > 0.0) {
            for (std::size_t t = 0; t < trials; ++t) {
                const double r = uniform01(rng) * total;
                auto it = std::upper_bound(cum.begin(), cum.end(), r);
                if (it == cum.end()) it = std::lower_bound(cum.begin(), cum.end(), total);
                picks.push_back(static_cast<std::size_t>(it - cum.begin()));
            }
        } else {
            // Every row coincides with a seed already; any row will do.
            picks.push_back(uniform_index(rng, n));
        }
        std::size_t chosen = 0;
        double chosen_potential = kInf;
        for (std::size_t t = 0; t < picks.size(); ++t) {
            const double potential = evaluate(picks[t], cand_d2[t]);
            if (potential < chosen_potential) {
                chosen_potential = potential;
                chosen = t;
            }
        }
        take(c, picks[chosen], cand_d2[chosen]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        b.upper[i] = std::sqrt(best[i]);
        b.lower[i] = std::sqrt(second[i]);
    }
    return centroids;
}

void check_config(MatrixView data, const KMeansConfig& cfg) {
    if (cfg.k == 0) fail("k-means requires k >= 1");
    if (cfg.k > data.rows)
        fail("k-means requires k <= N (k=" + std::to_string(cfg.k) +
             ", N=" + std::to_string(data.rows) + ")");
    if (data.cols == 0) fail("k-means requires vectors (dim = 0)");
    if (!(cfg.rel_tol >= 0.0)) fail("k-means rel_tol must be non-negative");
}

}  // namespace

KMeansRun kmeans_run(MatrixView data, const KMeansConfig& cfg, std::size_t restart) {
    check_config(data, cfg);
    const std::size_t n = data.rows;
    const std::size_t dim = data.cols;
    const std::size_t k = cfg.k;
    const unsigned threads = cfg.threads;
    Rng rng = make_rng(cfg.seed, restart);

    Bounds b{std::vector<std::int32_t>(n, 0), std::vector<double>(n, 0.0), std::vector<double>(n, kInf)};
    CentroidTable table(k, dim);
    std::vector<double> centroids;
    if (cfg.init == KMeansInit::PlusPlus) {
        centroids = plusplus_seeds(data, k, rng, b, threads);
        table.assign(centroids);
    } else {
        centroids = sampled_seeds(data, k, rng);
        table.assign(centroids);
        full_assign(data, table, b, threads);
    }

    KMeansRun run;
    run.inertia_history.push_back(assignment_sse(data, table, b.labels, threads));
    const double tolerance = cfg.rel_tol * feature_range(data);

    std::vector<double> next(k * dim);
    std::vector<std::size_t> counts(k);
    std::vector<double> moved(k);
    for (std::size_t iter = 1; iter <= cfg.max_iter; ++iter) {
        // Sequential accumulation in row order keeps the means bit-reproducible.
        std::fill(next.begin(), next.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(b.labels[i]);
            ++counts[c];
            const auto r = data.row(i);
            double* dst = next.data() + c * dim;
            for (std::size_t d = 0; d < dim; ++d) dst[d] += r[d];
        }
        std::vector<std::size_t> empty;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                empty.push_back(c);
                continue;
            }
            const double inv = 1.0 / static_cast<double>(counts[c]);
            for (std::size_t d = 0; d < dim; ++d) next[c * dim + d] *= inv;
        }
        if (!empty.empty()) {
            // Reseed each empty cluster at the point farthest from its centroid.
            std::vector<double> far(n);
            for (std::size_t i = 0; i < n; ++i)
                far[i] = squared_distance(
                    data.row(i),
                    std::span<const double>(next.data() + static_cast<std::size_t>(b.labels[i]) * dim, dim));
            std::vector<std::uint32_t> order(n);
            std::iota(order.begin(), order.end(), 0u);
            const std::size_t m = std::min(empty.size(), n);
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                              [&](std::uint32_t x, std::uint32_t y) {
                                  return far[x] != far[y] ? far[x] > far[y] : x < y;
                              });
            for (std::size_t e = 0; e < m; ++e) {
                const auto r = data.row(order[e]);
                std::copy(r.begin(), r.end(), next.begin() + static_cast<std::ptrdiff_t>(empty[e] * dim));
            }
        }

        double max_move = 0.0;
        std::size_t argmax = 0;
        double second_move = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = next[c * dim + d] - centroids[c * dim + d];
                s += diff * diff;
            }
            moved[c] = std::sqrt(s);
            if (moved[c] > max_move) {
                second_move = max_move;
                max_move = moved[c];
                argmax = c;
            } else if (moved[c] > second_move) {
                second_move = moved[c];
            }
        }
        centroids.swap(next);
        table.assign(centroids);
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = static_cast<std::size_t>(b.labels[i]);
            b.upper[i] += moved[a];
            b.lower[i] -= a == argmax ? second_move : max_move;
        }
        bounded_assign(data, table, CentroidGeometry(centroids, k, dim), b, threads);
        run.inertia_history.push_back(assignment_sse(data, table, b.labels, threads));
        run.iterations = iter;
        if (max_move <= tolerance) {
            run.converged = true;
            break;
        }
    }

    run.inertia = run.inertia_history.back();
    run.labels = std::move(b.labels);
    run.centroids = Matrix(k, dim);
    for (std::size_t i = 0; i < k * dim; ++i) run.centroids.values[i] = static_cast<float>(centroids[i]);
    return run;
}

ClusterAssignment kmeans_fit(MatrixView data, const KMeansConfig& cfg) {
    check_config(data, cfg);
    if (cfg.restarts == 0) fail("k-means requires restarts >= 1");
    KMeansRun best;
    bool have = false;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        KMeansRun run = kmeans_run(data, cfg, r);
        if (!have || run.inertia < best.inertia) {
            best = std::move(run);
            have = true;
        }
    }
    ClusterAssignment out;
    out.labels = std::move(best.labels);
    out.k = cfg.k;
    out.inertia = best.inertia;
    out.method = Method::KMeans;
    out.seed = cfg.seed;
    out.iterations_run = best.iterations;
    return out;
}

ClusterAssignment kmeans_fit(const EmbeddingDataset& ds, const KMeansConfig& cfg) {
    return kmeans_fit(ds.matrix(), cfg);
}

std::vector<std::int32_t> assign_to_centroids(MatrixView data, MatrixView centroids, unsigned threads) {
    if (centroids.cols != data.cols)
        fail("dimension mismatch: centroids have dim " + std::to_string(centroids.cols) +
             ", data has dim " + std::to_string(data.cols));
    if (centroids.rows == 0) fail("no centroids given");
    CentroidTable table(centroids.rows, centroids.cols);
    table.assign(std::vector<double>(centroids.values.begin(), centroids.values.end()));
    Bounds b{std::vector<std::int32_t>(data.rows), std::vector<double>(data.rows),
             std::vector<double>(data.rows)};
    full_assign(data, table, b, threads);
    return std::move(b.labels);
}

std::vector<std::int32_t> assign_to_centroids(const EmbeddingDataset& ds, MatrixView centroids,
                                              unsigned threads) {
    return assign_to_centroids(ds.matrix(), centroids, threads);
}

}  // namespace lcd
