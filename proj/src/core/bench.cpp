#include "bench.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include <sys/resource.h>
#include <sys/utsname.h>
#include <sys/wait.h>
#include <unistd.h>

#include "agglomerative.hpp"
#include "error.hpp"

namespace lcd {

namespace {

constexpr int kExitBudget = 3;
constexpr int kExitFailure = 4;

std::uint64_t budget_of(const BenchConfig& cfg) {
    return cfg.memory_budget != 0 ? cfg.memory_budget : default_memory_budget();
}

TauSearchConfig leaders_config(const EmbeddingDataset& ds, const BenchConfig& cfg) {
    TauSearchConfig t = cfg.leaders;
    if (t.target_m == 0) t.target_m = std::max<std::size_t>(cfg.k, ds.n_points() / 4);
    return t;
}

bool write_all(int fd, const void* data, std::size_t size) {
    const auto* p = static_cast<const char*>(data);
    while (size > 0) {
        const ssize_t w = ::write(fd, p, size);
        if (w < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        p += w;
        size -= static_cast<std::size_t>(w);
    }
    return true;
}

}  // namespace

std::string host_fingerprint() {
    struct utsname u {};
    std::ostringstream out;
    if (::uname(&u) == 0) out << u.sysname << '-' << u.release << '-' << u.machine;
    out << "-cpus" << ::sysconf(_SC_NPROCESSORS_ONLN);
    return out.str();
}

ClusterAssignment bench_cluster(const EmbeddingDataset& ds, Method method, const BenchConfig& cfg,
                                const LeadersCompression* compression) {
    switch (method) {
        case Method::KMeans: {
            KMeansConfig km = cfg.kmeans;
            km.k = cfg.k;
            if (cfg.threads != 0) km.threads = cfg.threads;
            return kmeans_fit(ds, km);
        }
        case Method::Agglomerative:
            return agglomerative_fit(ds, cfg.k, budget_of(cfg), cfg.threads);
        case Method::Leaders: {
            if (compression != nullptr)
                return cluster_compression(ds.matrix(), *compression, cfg.k, budget_of(cfg), cfg.threads);
            return leaders_cluster(ds, leaders_config(ds, cfg), cfg.k, budget_of(cfg), cfg.threads);
        }
    }
    throw Error(ErrorKind::Internal, "unknown method");
}

BenchRecord run_bench(const EmbeddingDataset& ds, Method method, const BenchConfig& cfg) {
    BenchRecord rec;
    rec.method = method;
    rec.n = ds.n_points();
    rec.dim = ds.dim();
    rec.k = cfg.k;
    rec.seed = method == Method::Leaders ? leaders_config(ds, cfg).seed : cfg.kmeans.seed;
    rec.host = host_fingerprint();

    if (method == Method::Agglomerative && ward_required_bytes(ds.n_points()) > budget_of(cfg)) {
        rec.status = "infeasible";
        return rec;
    }
    // Final tau is found up front; the search itself is not part of the measurement.
    double tau = 0.0;
    std::uint64_t order_seed = 0;
    bool exact = true;
    if (method == Method::Leaders) {
        const auto tcfg = leaders_config(ds, cfg);
        const auto search = tau_binary_search(ds, tcfg);
        tau = search.tau;
        order_seed = tcfg.seed;
        exact = tcfg.exact;
        rec.tau = tau;
        rec.leaders = search.compression.m();
        if (cfg.k > rec.leaders) {
            rec.status = "infeasible";
            return rec;
        }
    }

    int fds[2];
    if (::pipe(fds) != 0) throw Error(ErrorKind::Internal, std::string("pipe failed: ") + std::strerror(errno));
    std::fflush(nullptr);
    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        throw Error(ErrorKind::Internal, std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::close(fds[0]);
        int code = 0;
        try {
            ClusterAssignment a;
            if (method == Method::Leaders) {
                const auto comp = leaders_pass(ds, tau, order_seed, exact);
                a = bench_cluster(ds, method, cfg, &comp);
            } else {
                a = bench_cluster(ds, method, cfg);
            }
            const std::uint64_t h = assignment_hash(a);
            if (!write_all(fds[1], &h, sizeof h)) code = kExitFailure;
        } catch (const Error& e) {
            code = e.kind() == ErrorKind::Budget ? kExitBudget : kExitFailure;
        } catch (...) {
            code = kExitFailure;
        }
        ::close(fds[1]);
        ::_exit(code);
    }
    ::close(fds[1]);
    std::uint64_t hash = 0;
    std::size_t got = 0;
    while (got < sizeof hash) {
        const ssize_t r = ::read(fds[0], reinterpret_cast<char*>(&hash) + got, sizeof hash - got);
        if (r < 0 && errno == EINTR) continue;
        if (r <= 0) break;
        got += static_cast<std::size_t>(r);
    }
    ::close(fds[0]);
    int status = 0;
    struct rusage usage {};
    while (::wait4(pid, &status, 0, &usage) < 0) {
        if (errno != EINTR) throw Error(ErrorKind::Internal, std::string("wait4 failed: ") + std::strerror(errno));
    }
    const auto stop = std::chrono::steady_clock::now();

    rec.runtime_wall_s = std::chrono::duration<double>(stop - start).count();
    auto seconds = [](const timeval& tv) { return static_cast<double>(tv.tv_sec) + 1e-6 * static_cast<double>(tv.tv_usec); };
    rec.runtime_user_sys_s = seconds(usage.ru_utime) + seconds(usage.ru_stime);
    rec.peak_mem_bytes = static_cast<std::uint64_t>(usage.ru_maxrss) * 1024u;
    if (WIFEXITED(status) && WEXITSTATUS(status) == 0 && got == sizeof hash) {
        rec.status = "ok";
        rec.assignment_hash = hash;
    } else if (WIFEXITED(status) && WEXITSTATUS(status) == kExitBudget) {
        rec.status = "infeasible";
    } else {
        rec.status = "failed";
    }
    return rec;
}

double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) fail("slope fit needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) fail("slope fit needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) fail("slope fit needs distinct sizes");
    return sxy / sxx;
}

SweepResult scaling_sweep(const SynthConfig& generator, const std::vector<Method>& methods,
                          const std::vector<std::size_t>& sizes, const BenchConfig& cfg) {
    if (sizes.size() < 3) fail("scaling sweep needs at least 3 sizes");
    SweepResult out;
    std::map<Method, std::pair<std::vector<double>, std::vector<double>>> points;
    for (auto n : sizes) {
        SynthConfig g = generator;
        g.n_points = n;
        const auto data = generate(g);
        for (auto m : methods) {
            auto rec = run_bench(data.dataset, m, cfg);
            if (rec.status == "ok" && rec.runtime_user_sys_s > 0.0) {
                points[m].first.push_back(static_cast<double>(n));
                points[m].second.push_back(rec.runtime_user_sys_s);
            }
            out.records.push_back(std::move(rec));
        }
    }
    for (auto m : methods) {
        const auto& [xs, ys] = points[m];
        if (xs.size() < 3)
            fail("scaling sweep: only " + std::to_string(xs.size()) + " successful cells for " +
                 std::string(method_name(m)));
        out.exponents[m] = fit_log_slope(xs, ys);
    }
    return out;
}

std::string bench_csv_header() {
    return "method,n,dim,k,seed,runtime_user_sys_s,runtime_wall_s,peak_mem_bytes,status";
}

std::string bench_csv_row(const BenchRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%llu,%.6f,%.6f,%llu,%s", std::string(method_name(r.method)).c_str(),
                  r.n, r.dim, r.k, static_cast<unsigned long long>(r.seed), r.runtime_user_sys_s, r.runtime_wall_s,
                  static_cast<unsigned long long>(r.peak_mem_bytes), r.status.c_str());
    return buf;
}

}  // namespace lcd
