#include "bsde/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "bsde/parallel.hpp"

namespace bsde {

namespace {

struct AxisStencil {
  int offset = 0;
  double rho = 0.0;   // fractional offset in index units
  double w[4] = {0, 0, 0, 0};
  int lo = 0, hi = -1;  // node index range with both stencil cells in the grid
};

struct PointStencil {
  AxisStencil axis[2];
  double dw[2] = {0.0, 0.0};  // Brownian increment value at this quadrature point
  double weight = 0.0;
};

std::vector<PointStencil> make_stencils(const SpaceGrid& grid, const TensorRule& rule,
                                        double span) {
  const int d = grid.d;
  const double scale = std::sqrt(2.0 * span);
  std::vector<PointStencil> st(rule.size());
  for (std::size_t p = 0; p < rule.size(); ++p) {
    PointStencil& s = st[p];
    s.weight = rule.weights[p];
    for (int a = 0; a < d; ++a) {
      const double delta = scale * rule.point(p)[a];
      s.dw[a] = delta;
      AxisStencil& ax = s.axis[a];
      ax.rho = delta / grid.dx[static_cast<std::size_t>(a)];
      ax.offset = static_cast<int>(std::floor(ax.rho));
      const double u = (ax.rho - ax.offset) * grid.dx[static_cast<std::size_t>(a)];
      FieldInterpolant::axis_weights(u, grid.dx[static_cast<std::size_t>(a)], ax.w);
      const int n = grid.n_cells[static_cast<std::size_t>(a)];
      ax.lo = std::max(0, -ax.offset);
      ax.hi = std::min(n, n - 1 - ax.offset);  // node index must keep cell in [0, n-1]
    }
  }
  return st;
}

}  // namespace

int effective_q(const SolverConfig& config, const BSDEProblem& problem) {
  if (config.q > 0) return config.q;
  int q = std::min(config.k_y + 1, config.k_z);
  return std::min(q, problem.generator_uses_z ? 3 : 4);
}

LevelExpectations compute_expectations(const BSDEProblem& problem, const SpaceGrid& grid,
                                       const TensorRule& rule, const StepParams& params,
                                       std::span<const FieldInterpolant* const> ahead) {
  const int d = grid.d;
  const int m = problem.m;
  const int k_max = std::max(params.k_y, params.k_z);
  if (static_cast<int>(ahead.size()) < k_max)
    throw std::invalid_argument("compute_expectations: need K ahead levels");
  if (d != 1 && d != 2) throw std::invalid_argument("compute_expectations: d must be 1 or 2");

  const std::size_t n = grid.num_nodes();
  const std::size_t nm = n * static_cast<std::size_t>(m);
  const std::size_t nmd = nm * static_cast<std::size_t>(d);
  LevelExpectations ex;
  ex.k_y = params.k_y;
  ex.k_z = params.k_z;
  ex.m = m;
  ex.d = d;
  ex.n_nodes = n;
  ex.e_y.assign(nm, 0.0);
  ex.e_f.assign(nm * static_cast<std::size_t>(params.k_y), 0.0);
  ex.e_fdw.assign(nmd * static_cast<std::size_t>(params.k_z), 0.0);
  ex.e_z.assign(nmd * static_cast<std::size_t>(params.k_z), 0.0);

  // Stencil tables per ahead level: offsets and weights are shared by every
  // node because grid nodes and quadrature shifts live on the same lattice.
  std::vector<std::vector<PointStencil>> stencils(static_cast<std::size_t>(k_max));
  for (int j = 1; j <= k_max; ++j)
    stencils[static_cast<std::size_t>(j - 1)] = make_stencils(grid, rule, j * params.h);

  const int sdim = problem.state_dim();
  const bool gbm = problem.forward.kind == ForwardDynamics::Kind::GBM;
  const int n1 = d == 2 ? grid.nodes_per_axis(1) : 0;

  // GBM runs on the Brownian grid; cache exp(sigma * x_i) once.
  std::vector<double> expx;
  if (gbm) {
    expx.resize(static_cast<std::size_t>(grid.nodes_per_axis(0)));
    for (int i = 0; i < grid.nodes_per_axis(0); ++i)
      expx[static_cast<std::size_t>(i)] = std::exp(problem.forward.sigma * grid.coordinate(0, i));
  }

  parallel_for_chunks(n, params.workers, [&](std::size_t begin, std::size_t end) {
    const std::size_t count = end - begin;
    std::vector<double> yq(count * static_cast<std::size_t>(m));
    std::vector<double> zq(count * static_cast<std::size_t>(m) * static_cast<std::size_t>(d));
    std::vector<double> fq(count * static_cast<std::size_t>(m));
    std::vector<double> states(count * static_cast<std::size_t>(sdim));

    for (int j = 1; j <= k_max; ++j) {
      const FieldInterpolant* interp = ahead[static_cast<std::size_t>(j - 1)];
      const double t_j = params.t_i + j * params.h;
      double gbm_base = 0.0;
      if (gbm)
        gbm_base = problem.forward.s0 *
                   std::exp((problem.forward.mu - 0.5 * problem.forward.sigma * problem.forward.sigma) * t_j);
      for (const PointStencil& s : stencils[static_cast<std::size_t>(j - 1)]) {
        // Evaluate every field of the ahead level at x_node + dw.
        if (d == 1) {
          const AxisStencil& ax = s.axis[0];
          for (std::size_t k = 0; k < count; ++k) {
            const int i0 = static_cast<int>(begin + k);
            const bool fast = i0 >= ax.lo && i0 <= ax.hi;
            for (int c = 0; c < m; ++c)
              yq[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)] =
                  fast ? interp->eval_fast1(c, i0 + ax.offset, ax.w)
                       : interp->eval_field1(c, i0 + ax.rho);
            for (int c = 0; c < m; ++c)
              zq[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)] =
                  fast ? interp->eval_fast1(m + c, i0 + ax.offset, ax.w)
                       : interp->eval_field1(m + c, i0 + ax.rho);
            states[k] = gbm ? gbm_base * std::exp(problem.forward.sigma * s.dw[0]) *
                                  expx[static_cast<std::size_t>(i0)]
                            : grid.coordinate(0, i0) + s.dw[0];
          }
        } else {
          std::size_t node = begin;
          int i0 = static_cast<int>(node) / n1;
          int i1 = static_cast<int>(node) % n1;
          const AxisStencil& ax0 = s.axis[0];
          const AxisStencil& ax1 = s.axis[1];
          for (std::size_t k = 0; k < count; ++k) {
            const bool fast = i0 >= ax0.lo && i0 <= ax0.hi && i1 >= ax1.lo && i1 <= ax1.hi;
            for (int c = 0; c < m * 3; ++c) {  // m y-fields + 2m z-fields
              double v = fast ? interp->eval_fast2(c, i0 + ax0.offset, i1 + ax1.offset, ax0.w, ax1.w)
                              : interp->eval_field2(c, i0 + ax0.rho, i1 + ax1.rho);
              if (c < m)
                yq[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)] = v;
              else
                zq[k * static_cast<std::size_t>(m) * 2 + static_cast<std::size_t>(c - m)] = v;
            }
            states[k * 2] = grid.coordinate(0, i0) + s.dw[0];
            states[k * 2 + 1] = grid.coordinate(1, i1) + s.dw[1];
            if (++i1 == n1) {
              i1 = 0;
              ++i0;
            }
          }
        }

        problem.generator(t_j, count, states.data(), yq.data(), zq.data(), fq.data());

        const double w = s.weight;
        if (j <= params.k_y) {
          double* plane = ex.f_plane(j) + begin * static_cast<std::size_t>(m);
          for (std::size_t k = 0; k < count * static_cast<std::size_t>(m); ++k)
            plane[k] += w * fq[k];
        }
        if (j == params.k_y) {
          double* acc = ex.e_y.data() + begin * static_cast<std::size_t>(m);
          for (std::size_t k = 0; k < count * static_cast<std::size_t>(m); ++k)
            acc[k] += w * yq[k];
        }
        if (j <= params.k_z) {
          double* fplane = ex.fdw_plane(j) + begin * static_cast<std::size_t>(m) * static_cast<std::size_t>(d);
          double* zplane = ex.z_plane(j) + begin * static_cast<std::size_t>(m) * static_cast<std::size_t>(d);
          for (std::size_t k = 0; k < count; ++k) {
            for (int c = 0; c < m; ++c) {
              const double fv = w * fq[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)];
              for (int a = 0; a < d; ++a) {
                const std::size_t at = (k * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)) * static_cast<std::size_t>(d) + static_cast<std::size_t>(a);
                fplane[at] += fv * s.dw[a];
                zplane[at] += w * zq[at];
              }
            }
          }
        }
      }
    }

    // Normalize the Gauss-Hermite sums by pi^{d/2}.
    const double inv = 1.0 / std::pow(std::numbers::pi, d / 2.0);
    auto scale_range = [&](std::vector<double>& v, std::size_t per_node) {
      double* p = v.data() + begin * per_node;
      for (std::size_t k = 0; k < count * per_node; ++k) p[k] *= inv;
    };
    scale_range(ex.e_y, static_cast<std::size_t>(m));
    for (int j = 1; j <= params.k_y; ++j) {
      double* plane = ex.f_plane(j) + begin * static_cast<std::size_t>(m);
      for (std::size_t k = 0; k < count * static_cast<std::size_t>(m); ++k) plane[k] *= inv;
    }
    for (int j = 1; j <= params.k_z; ++j) {
      double* fplane = ex.fdw_plane(j) + begin * static_cast<std::size_t>(m) * static_cast<std::size_t>(d);
      double* zplane = ex.z_plane(j) + begin * static_cast<std::size_t>(m) * static_cast<std::size_t>(d);
      for (std::size_t k = 0; k < count * static_cast<std::size_t>(m) * static_cast<std::size_t>(d); ++k) {
        fplane[k] *= inv;
        zplane[k] *= inv;
      }
    }
  });

  return ex;
}

std::vector<double> step_z(const LevelExpectations& ex, std::span<const double> gamma_z) {
  if (static_cast<int>(gamma_z.size()) != ex.k_z + 1)
    throw std::invalid_argument("step_z: weight count mismatch");
  if (gamma_z[0] == 0.0) throw std::invalid_argument("step_z: gamma_0 must be nonzero");
  const std::size_t nmd = ex.n_nodes * static_cast<std::size_t>(ex.m) * static_cast<std::size_t>(ex.d);
  std::vector<double> z(nmd);
  const double inv_g0 = 1.0 / gamma_z[0];
  const double* ez1 = ex.z_plane(1);
  for (std::size_t k = 0; k < nmd; ++k) z[k] = ez1[k];
  for (int j = 1; j <= ex.k_z; ++j) {
    const double g = gamma_z[static_cast<std::size_t>(j)];
    const double* fp = ex.fdw_plane(j);
    const double* zp = ex.z_plane(j);
    for (std::size_t k = 0; k < nmd; ++k) z[k] += g * (fp[k] - zp[k]);
  }
  for (std::size_t k = 0; k < nmd; ++k) z[k] *= inv_g0;
  return z;
}

namespace {

// Dense m x m solve for the Newton correction; m is tiny.
void solve_small(std::vector<double>& a, std::vector<double>& b, int m) {
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(a[static_cast<std::size_t>(r * m + col)]) > std::abs(a[static_cast<std::size_t>(piv * m + col)])) piv = r;
    if (piv != col) {
      for (int c = 0; c < m; ++c) std::swap(a[static_cast<std::size_t>(col * m + c)], a[static_cast<std::size_t>(piv * m + c)]);
      std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(piv)]);
    }
    const double pivot = a[static_cast<std::size_t>(col * m + col)];
    if (pivot == 0.0) throw std::runtime_error("step_y: singular Newton Jacobian");
    for (int r = col + 1; r < m; ++r) {
      const double f = a[static_cast<std::size_t>(r * m + col)] / pivot;
      if (f == 0.0) continue;
      for (int c = col; c < m; ++c) a[static_cast<std::size_t>(r * m + c)] -= f * a[static_cast<std::size_t>(col * m + c)];
      b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
    }
  }
  for (int r = m - 1; r >= 0; --r) {
    double s = b[static_cast<std::size_t>(r)];
    for (int c = r + 1; c < m; ++c) s -= a[static_cast<std::size_t>(r * m + c)] * b[static_cast<std::size_t>(c)];
    b[static_cast<std::size_t>(r)] = s / a[static_cast<std::size_t>(r * m + r)];
  }
}

}  // namespace

std::vector<double> step_y(const BSDEProblem& problem, const SpaceGrid& grid,
                           const StepParams& params, const LevelExpectations& ex,
                           std::span<const double> gamma_y, std::span<const double> z_field,
                           SolveDiagnostics* diagnostics) {
  const int m = ex.m;
  if (static_cast<int>(gamma_y.size()) != ex.k_y + 1)
    throw std::invalid_argument("step_y: weight count mismatch");
  const std::size_t n = ex.n_nodes;
  const std::size_t nm = n * static_cast<std::size_t>(m);
  std::vector<double> y(nm);

  // Known part: E[Y^{i+Ky}] + h Ky sum_{j>=1} gamma_j E[f(t_{i+j})].
  std::vector<double> known(ex.e_y);
  const double hk = params.h * params.k_y;
  for (int j = 1; j <= ex.k_y; ++j) {
    const double g = hk * gamma_y[static_cast<std::size_t>(j)];
    const double* plane = ex.f_plane(j);
    for (std::size_t k = 0; k < nm; ++k) known[k] += g * plane[k];
  }
  const double cc = hk * gamma_y[0];

  const int d = grid.d;
  const int sdim = problem.state_dim();
  const int n1 = d == 2 ? grid.nodes_per_axis(1) : 0;

  std::atomic<long long> total_iters{0};
  std::atomic<int> max_iters{0};

  parallel_for_chunks(n, params.workers, [&](std::size_t begin, std::size_t end) {
    const std::size_t count = end - begin;
    std::vector<double> coords(count * static_cast<std::size_t>(d));
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t node = begin + k;
      if (d == 1) {
        coords[k] = grid.coordinate(0, static_cast<int>(node));
      } else {
        coords[k * 2] = grid.coordinate(0, static_cast<int>(node) / n1);
        coords[k * 2 + 1] = grid.coordinate(1, static_cast<int>(node) % n1);
      }
    }
    std::vector<double> states(count * static_cast<std::size_t>(sdim));
    forward_states(problem.forward, params.t_i, count, coords.data(), d, states.data());

    const double* zc = z_field.data() + begin * static_cast<std::size_t>(m) * static_cast<std::size_t>(d);
    const double* kn = known.data() + begin * static_cast<std::size_t>(m);
    double* yc = y.data() + begin * static_cast<std::size_t>(m);

    std::vector<double> fbuf(count * static_cast<std::size_t>(m));
    std::vector<double> ycur(count * static_cast<std::size_t>(m));

    // Explicit predictor: right side evaluated at y = E[Y^{i+Ky}].
    problem.generator(params.t_i, count, states.data(),
                      ex.e_y.data() + begin * static_cast<std::size_t>(m), zc, fbuf.data());
    for (std::size_t k = 0; k < count * static_cast<std::size_t>(m); ++k)
      ycur[k] = kn[k] + cc * fbuf[k];

    std::vector<char> active(count, 1);
    std::vector<int> iters(count, 0);
    std::vector<double> ypert(count * static_cast<std::size_t>(m));
    std::vector<double> fplus(count * static_cast<std::size_t>(m));
    std::vector<double> fminus(count * static_cast<std::size_t>(m));
    std::vector<double> jac(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
    std::vector<double> rhs(static_cast<std::size_t>(m));
    std::vector<double> jacs(count * static_cast<std::size_t>(m) * static_cast<std::size_t>(m));

    for (int pass = 0;; ++pass) {
      problem.generator(params.t_i, count, states.data(), ycur.data(), zc, fbuf.data());
      bool any_active = false;
      for (std::size_t k = 0; k < count; ++k) {
        if (!active[k]) continue;
        bool converged = true;
        for (int c = 0; c < m; ++c) {
          const std::size_t at = k * static_cast<std::size_t>(m) + static_cast<std::size_t>(c);
          const double res = ycur[at] - kn[at] - cc * fbuf[at];
          if (std::abs(res) > params.newton_tol * (1.0 + std::abs(ycur[at]))) {
            converged = false;
            break;
          }
        }
        if (converged)
          active[k] = 0;
        else
          any_active = true;
      }
      if (!any_active) break;
      if (pass >= params.newton_max_iter) {
        std::size_t worst = begin;
        double worst_res = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
          if (!active[k]) continue;
          for (int c = 0; c < m; ++c) {
            const std::size_t at = k * static_cast<std::size_t>(m) + static_cast<std::size_t>(c);
            const double res = std::abs(ycur[at] - kn[at] - cc * fbuf[at]);
            if (res >= worst_res) {
              worst_res = res;
              worst = begin + k;
            }
          }
        }
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "step_y: Newton did not converge at node %zu (residual %.3e, t=%.6g)", worst,
                      worst_res, params.t_i);
        throw std::runtime_error(msg);
      }

      // Finite-difference Jacobian columns of f in y, frozen nodes skipped
      // from the update but still evaluated (keeps the batch shape fixed).
      for (int col = 0; col < m; ++col) {
        std::copy(ycur.begin(), ycur.end(), ypert.begin());
        for (std::size_t k = 0; k < count; ++k) {
          const std::size_t at = k * static_cast<std::size_t>(m) + static_cast<std::size_t>(col);
          ypert[at] += 1e-6 * (1.0 + std::abs(ycur[at]));
        }
        problem.generator(params.t_i, count, states.data(), ypert.data(), zc, fplus.data());
        std::copy(ycur.begin(), ycur.end(), ypert.begin());
        for (std::size_t k = 0; k < count; ++k) {
          const std::size_t at = k * static_cast<std::size_t>(m) + static_cast<std::size_t>(col);
          ypert[at] -= 1e-6 * (1.0 + std::abs(ycur[at]));
        }
        problem.generator(params.t_i, count, states.data(), ypert.data(), zc, fminus.data());
        for (std::size_t k = 0; k < count; ++k) {
          const double eps = 1e-6 * (1.0 + std::abs(ycur[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(col)]));
          for (int r = 0; r < m; ++r) {
            const std::size_t at = k * static_cast<std::size_t>(m) + static_cast<std::size_t>(r);
            jacs[(k * static_cast<std::size_t>(m) + static_cast<std::size_t>(r)) * static_cast<std::size_t>(m) + static_cast<std::size_t>(col)] =
                (fplus[at] - fminus[at]) / (2.0 * eps);
          }
        }
      }

      for (std::size_t k = 0; k < count; ++k) {
        if (!active[k]) continue;
        for (int r = 0; r < m; ++r) {
          const std::size_t at = k * static_cast<std::size_t>(m) + static_cast<std::size_t>(r);
          rhs[static_cast<std::size_t>(r)] = ycur[at] - kn[at] - cc * fbuf[at];
          for (int c = 0; c < m; ++c)
            jac[static_cast<std::size_t>(r * m + c)] =
                (r == c ? 1.0 : 0.0) -
                cc * jacs[(k * static_cast<std::size_t>(m) + static_cast<std::size_t>(r)) * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)];
        }
        solve_small(jac, rhs, m);
        for (int c = 0; c < m; ++c)
          ycur[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)] -= rhs[static_cast<std::size_t>(c)];
        ++iters[k];
      }
    }

    std::copy(ycur.begin(), ycur.end(), yc);
    long long local_total = 0;
    int local_max = 0;
    for (std::size_t k = 0; k < count; ++k) {
      local_total += iters[k];
      local_max = std::max(local_max, iters[k]);
    }
    total_iters.fetch_add(local_total);
    int prev = max_iters.load();
    while (local_max > prev && !max_iters.compare_exchange_weak(prev, local_max)) {
    }
  });

  if (diagnostics) {
    diagnostics->newton_iterations += total_iters.load();
    diagnostics->newton_max_iterations = std::max(diagnostics->newton_max_iterations, max_iters.load());
  }
  return y;
}

namespace {

using InterpPtr = std::unique_ptr<FieldInterpolant>;

struct LevelStore {
  SolutionLevel level;
  InterpPtr interp;
};

class Sweep {
 public:
  Sweep(const BSDEProblem& problem, const SolverConfig& config, const SpaceGrid& grid,
        const TensorRule& rule)
      : problem_(problem), config_(config), grid_(grid), rule_(rule) {}

  const std::vector<double>& y_weights(int k) {
    auto [it, fresh] = yw_.try_emplace(k);
    if (fresh) it->second = derive_y_weights(k, default_kind(k, config_.k2_variant)).as_doubles();
    return it->second;
  }
  const std::vector<double>& z_weights(int k) {
    auto [it, fresh] = zw_.try_emplace(k);
    if (fresh) it->second = derive_z_weights(k, 1, default_kind(k, config_.k2_variant)).as_doubles();
    return it->second;
  }

  SolutionLevel compute_level(int index, double t_i, double h, int ky, int kz,
                              std::span<const FieldInterpolant* const> ahead,
                              SolveDiagnostics* diag) {
    StepParams params;
    params.k_y = ky;
    params.k_z = kz;
    params.h = h;
    params.t_i = t_i;
    params.newton_tol = config_.newton_tol;
    params.newton_max_iter = config_.newton_max_iter;
    params.workers = config_.workers;
    LevelExpectations ex = compute_expectations(problem_, grid_, rule_, params, ahead);
    SolutionLevel out(index, problem_.m, grid_.d, grid_.num_nodes());
    out.z = step_z(ex, z_weights(kz));
    out.y = step_y(problem_, grid_, params, ex, y_weights(ky), out.z, diag);
    return out;
  }

 private:
  const BSDEProblem& problem_;
  const SolverConfig& config_;
  const SpaceGrid& grid_;
  const TensorRule& rule_;
  std::map<int, std::vector<double>> yw_;
  std::map<int, std::vector<double>> zw_;
};

}  // namespace

SolveResult solve(const BSDEProblem& problem, const SolverConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  if (config.k_y < 1 || config.k_z < 1) throw std::invalid_argument("solve: k_y, k_z must be >= 1");
  if (config.k_z > config.n_t || config.n_t < std::max(config.k_y, config.k_z))
    throw std::invalid_argument("solve: need n_t >= max(k_y, k_z)");
  if (!problem.generator || !problem.terminal)
    throw std::invalid_argument("solve: problem must define generator and terminal");
  if (problem.forward.kind == ForwardDynamics::Kind::GBM && problem.d != 1)
    throw std::invalid_argument("solve: GBM forward dynamics require d = 1");

  const double h = problem.T / config.n_t;
  const int q = effective_q(config, problem);
  const double dx_target = config.dx_override > 0.0 ? config.dx_override : dx_from_h(h, q);
  SpaceGrid grid = build_grid(problem.d, config.lower, config.upper, dx_target);
  TensorRule rule = tensorize(gauss_hermite(config.quad_order), problem.d);

  const int K = std::max(config.k_y, config.k_z);
  const std::size_t n = grid.num_nodes();
  const int m = problem.m;
  const int d = problem.d;

  SolveResult result;
  result.grid = grid;
  result.diagnostics.workers = resolve_workers(config.workers);
  result.diagnostics.grid_nodes = n;
  result.diagnostics.dx = grid.dx[0];
  result.diagnostics.q = q;

  Sweep sweep(problem, config, grid, rule);

  std::map<int, LevelStore> levels;
  auto store = [&](SolutionLevel&& level, double t) {
    if (!level.all_finite()) {
      throw std::runtime_error("solve: non-finite field values at time index " +
                               std::to_string(level.time_index));
    }
    if (!config.dump_dir.empty())
      write_level(config.dump_dir + "/level_" + std::to_string(level.time_index) + ".dat", grid,
                  level, t);
    int idx = level.time_index;
    LevelStore ls;
    ls.level = std::move(level);
    ls.interp = std::make_unique<FieldInterpolant>(grid, ls.level, config.extrapolation);
    levels[idx] = std::move(ls);
  };

  // Node coordinates and forward states at a given time.
  std::vector<double> coords(n * static_cast<std::size_t>(d));
  {
    std::vector<int> idx(static_cast<std::size_t>(d));
    for (std::size_t node = 0; node < n; ++node) {
      grid.unflatten(node, idx);
      for (int a = 0; a < d; ++a)
        coords[node * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] =
            grid.coordinate(a, idx[static_cast<std::size_t>(a)]);
    }
  }
  const int sdim = problem.state_dim();
  std::vector<double> states(n * static_cast<std::size_t>(sdim));
  auto states_at = [&](double t) {
    forward_states(problem.forward, t, n, coords.data(), d, states.data());
  };

  // Terminal level: (possibly smoothed) g, z from analytic data or the spline
  // gradient of the terminal y field.
  double smoothing_radius = 0.0;
  if (problem.smoothed_terminal && config.smoothing_radius >= 0.0)
    smoothing_radius = config.smoothing_radius > 0.0 ? config.smoothing_radius
                                                     : problem.smoothed_terminal->radius_for_dx(grid.dx[0]);
  const bool smoothing_active = smoothing_radius > 0.0;
  {
    SolutionLevel terminal(config.n_t, m, d, n);
    states_at(problem.T);
    if (smoothing_active) {
      problem.smoothed_terminal->eval(smoothing_radius, n, states.data(), terminal.y.data(),
                                      terminal.z.data());
    } else {
      problem.terminal(n, states.data(), terminal.y.data());
      if (problem.has_analytic()) {
        std::vector<double> ytmp(n * static_cast<std::size_t>(m));
        problem.analytic(problem.T, n, states.data(), ytmp.data(), terminal.z.data());
      } else {
        FieldInterpolant tmp(grid, terminal, config.extrapolation);
        for (int c = 0; c < m; ++c)
          for (int a = 0; a < d; ++a) {
            std::vector<double> g = tmp.node_gradient(c, a);
            for (std::size_t node = 0; node < n; ++node)
              terminal.z[(node * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)) * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = g[node];
          }
      }
    }
    store(std::move(terminal), problem.T);
  }

  // Bootstrap the K-1 startup levels.
  if (K > 1) {
    switch (config.bootstrap) {
      case BootstrapMode::Analytic: {
        if (!problem.has_analytic())
          throw std::invalid_argument("solve: analytic bootstrap requires an analytic solution");
        for (int j = 1; j < K; ++j) {
          const int idx = config.n_t - j;
          const double t = idx * h;
          SolutionLevel level(idx, m, d, n);
          states_at(t);
          problem.analytic(t, n, states.data(), level.y.data(), level.z.data());
          store(std::move(level), t);
        }
        break;
      }
      case BootstrapMode::IterativeRampUp: {
        for (int j = 1; j < K; ++j) {
          const int idx = config.n_t - j;
          const double t = idx * h;
          std::vector<const FieldInterpolant*> ahead;
          for (int jj = 1; jj <= j; ++jj) ahead.push_back(levels.at(idx + jj).interp.get());
          store(sweep.compute_level(idx, t, h, j, j, ahead, &result.diagnostics), t);
        }
        break;
      }
      case BootstrapMode::FineOneStep: {
        if (config.fine_substeps < 1)
          throw std::invalid_argument("solve: fine_substeps must be positive");
        const int R = config.fine_substeps;
        const double hf = h / R;
        LevelStore prev;
        prev.level = levels.at(config.n_t).level;
        prev.interp = std::make_unique<FieldInterpolant>(grid, prev.level, config.extrapolation);
        for (int r = 1; r <= (K - 1) * R; ++r) {
          const double t = problem.T - r * hf;
          const FieldInterpolant* ahead[1] = {prev.interp.get()};
          SolutionLevel level = sweep.compute_level(-1, t, hf, 1, 1, ahead, &result.diagnostics);
          if (r % R == 0) {
            const int idx = config.n_t - r / R;
            SolutionLevel copy = level;
            copy.time_index = idx;
            store(std::move(copy), t);
          }
          prev.level = std::move(level);
          prev.interp = std::make_unique<FieldInterpolant>(grid, prev.level, config.extrapolation);
        }
        break;
      }
    }
  }

  // Backward sweep to t = 0. With a smoothed terminal the first computed
  // level drops the terminal data and runs a (K-1)-step substitute.
  for (int i = config.n_t - K; i >= 0; --i) {
    const double t = i * h;
    int ky = config.k_y, kz = config.k_z;
    if (smoothing_active && config.drop_smoothed_terminal && i == config.n_t - K && K >= 2) {
      ky = std::min(ky, K - 1);
      kz = std::min(kz, K - 1);
    }
    std::vector<const FieldInterpolant*> ahead;
    for (int j = 1; j <= std::max(ky, kz); ++j) ahead.push_back(levels.at(i + j).interp.get());
    store(sweep.compute_level(i, t, h, ky, kz, ahead, &result.diagnostics), t);
    levels.erase(i + K);  // stencil window moved past it
  }

  // Evaluate at the origin (the s0 point for GBM problems).
  result.y0.resize(static_cast<std::size_t>(m));
  result.z0.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(d));
  {
    const LevelStore& l0 = levels.at(0);
    std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
    l0.interp->eval(origin, result.y0, result.z0);
    result.level0 = l0.level;
  }

  result.diagnostics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace bsde
