#include "ictree/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ictree {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDroppedTol = 1e-9;

bool dropped_match(const Leaf& leaf, const Eigen::VectorXd& x_num) {
  for (const auto& [k, value] : leaf.dropped) {
    if (std::abs(x_num(k) - value) > kDroppedTol * std::max(1.0, std::abs(value))) return false;
  }
  return true;
}

/// One leaf together with the (possibly evidence-restricted) distributions
/// and weight to evaluate it with.
struct LeafView {
  const Leaf* leaf = nullptr;
  double weight = 0.0;
  const std::vector<Qpd<double>>* comps = nullptr;
  const std::vector<Multinomial>* syms = nullptr;
};

std::vector<LeafView> base_views(const IcTreeModel& model) {
  std::vector<LeafView> views;
  for (Eigen::Index id = 0; id < model.leaf_count(); ++id) {
    const Leaf& leaf = model.leaf(id);
    views.push_back({&leaf, leaf.weight, &leaf.component_dists, &leaf.symbolic_dists});
  }
  return views;
}

std::vector<LeafView> restricted_views(const RestrictedModel& view) {
  std::vector<LeafView> views;
  for (Eigen::Index id = 0; id < view.base().leaf_count(); ++id) {
    views.push_back({&view.base().leaf(id), view.weights()(id), &view.component_dists(id),
                     &view.symbolic_dists(id)});
  }
  return views;
}

/// log(|det W| * prod qpd_pdf(components) * dropped indicators); no weight,
/// no symbolic factors.
double leaf_numeric_log_density(const LeafView& v, const Eigen::VectorXd& x_num) {
  const Leaf& leaf = *v.leaf;
  if (!dropped_match(leaf, x_num)) return -kInf;
  double ll = leaf.transform.log_abs_det_unmixing;
  if (!leaf.kept.empty()) {
    Eigen::VectorXd sub(static_cast<Eigen::Index>(leaf.kept.size()));
    for (std::size_t k = 0; k < leaf.kept.size(); ++k)
      sub(static_cast<Eigen::Index>(k)) = x_num(leaf.kept[k]);
    const Eigen::VectorXd e = transform(leaf.transform, sub);
    for (Eigen::Index j = 0; j < e.size(); ++j) {
      const double lp = (*v.comps)[static_cast<std::size_t>(j)].log_pdf(e(j));
      if (lp == -kInf) return -kInf;
      ll += lp;
    }
  }
  return ll;
}

double leaf_log_density(const IcTreeModel& model, const LeafView& v,
                        const Eigen::VectorXd& x_num, const Eigen::VectorXd& full_row) {
  if (!(v.weight > 0.0)) return -kInf;
  double ll = std::log(v.weight) + leaf_numeric_log_density(v, x_num);
  if (ll == -kInf) return -kInf;
  const auto& sym_cols = model.symbolic_columns();
  for (std::size_t s = 0; s < sym_cols.size(); ++s) {
    const double p = (*v.syms)[s].pmf(static_cast<int>(full_row(sym_cols[s])));
    if (!(p > 0.0)) return -kInf;
    ll += std::log(p);
  }
  return ll;
}

double log_sum_exp(const std::vector<double>& lls) {
  double best = -kInf;
  for (const double ll : lls) best = std::max(best, ll);
  if (best == -kInf) return -kInf;
  double sum = 0.0;
  for (const double ll : lls)
    if (ll != -kInf) sum += std::exp(ll - best);
  return best + std::log(sum);
}

double mixture_log_density(const IcTreeModel& model, const std::vector<LeafView>& views,
                           const Eigen::VectorXd& full_row) {
  model.check_symbolic_codes(full_row);
  const Eigen::VectorXd x_num = model.gather_numeric(full_row);
  std::vector<double> lls;
  lls.reserve(views.size());
  for (const LeafView& v : views) lls.push_back(leaf_log_density(model, v, x_num, full_row));
  return log_sum_exp(lls);
}

/// Range of original coordinate pos (within the leaf's kept block) over the
/// image of the component support box under the mixing matrix.
Interval back_mapped_range(const Leaf& leaf, const std::vector<Qpd<double>>& comps,
                           Eigen::Index pos) {
  double lo = leaf.transform.mean(pos);
  double hi = lo;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(comps.size()); ++j) {
    const double a = leaf.transform.mixing(pos, j);
    const double s0 = comps[static_cast<std::size_t>(j)].support_lo();
    const double s1 = comps[static_cast<std::size_t>(j)].support_hi();
    lo += std::min(a * s0, a * s1);
    hi += std::max(a * s0, a * s1);
  }
  return {lo, hi};
}

/// Per-numeric-column value ranges spanned by the active leaves (kept columns
/// via their back-mapped supports, dropped columns at their constants).
std::vector<Interval> column_ranges(const IcTreeModel& model, const std::vector<LeafView>& views) {
  std::vector<Interval> ranges(static_cast<std::size_t>(model.num_numeric()), {kInf, -kInf});
  const auto widen = [&](Eigen::Index col, double lo, double hi) {
    auto& r = ranges[static_cast<std::size_t>(col)];
    r.lo = std::min(r.lo, lo);
    r.hi = std::max(r.hi, hi);
  };
  for (const LeafView& v : views) {
    if (!(v.weight > 0.0)) continue;
    const Leaf& leaf = *v.leaf;
    for (std::size_t pos = 0; pos < leaf.kept.size(); ++pos) {
      const Interval r = back_mapped_range(leaf, *v.comps, static_cast<Eigen::Index>(pos));
      widen(leaf.kept[pos], r.lo, r.hi);
    }
    for (const auto& [k, value] : leaf.dropped) widen(k, value, value);
  }
  return ranges;
}

SampleResult sample_views(const IcTreeModel& model, const std::vector<LeafView>& views,
                          Eigen::Index n, Rng& rng, int max_retries) {
  const auto n_leaves = static_cast<Eigen::Index>(views.size());
  Eigen::VectorXd cum(n_leaves);
  double acc = 0.0;
  for (Eigen::Index id = 0; id < n_leaves; ++id) {
    acc += std::max(0.0, views[static_cast<std::size_t>(id)].weight);
    cum(id) = acc;
  }

  const auto& num_cols = model.numeric_columns();
  const auto& sym_cols = model.symbolic_columns();
  Dataset::Storage rows(n, static_cast<Eigen::Index>(model.columns().size()));
  Eigen::VectorXi leaves(n);
  Eigen::VectorXd full_row(static_cast<Eigen::Index>(model.columns().size()));
  Eigen::Index accepted = 0;
  Eigen::Index discarded = 0;

  for (Eigen::Index draw = 0; draw < n; ++draw) {
    const double u = rng.uniform() * acc;
    Eigen::Index id = 0;
    while (id + 1 < n_leaves && u >= cum(id)) ++id;
    const LeafView& v = views[static_cast<std::size_t>(id)];
    const Leaf& leaf = *v.leaf;

    bool ok = false;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
      Eigen::VectorXd s(static_cast<Eigen::Index>(leaf.kept.size()));
      for (Eigen::Index j = 0; j < s.size(); ++j)
        s(j) = (*v.comps)[static_cast<std::size_t>(j)].sample(rng);
      const Eigen::VectorXd x_kept = inverse_transform(leaf.transform, s);
      for (std::size_t k = 0; k < leaf.kept.size(); ++k)
        full_row(num_cols[static_cast<std::size_t>(leaf.kept[k])]) =
            x_kept(static_cast<Eigen::Index>(k));
      for (const auto& [k, value] : leaf.dropped)
        full_row(num_cols[static_cast<std::size_t>(k)]) = value;
      for (std::size_t sidx = 0; sidx < sym_cols.size(); ++sidx)
        full_row(sym_cols[sidx]) = (*v.syms)[sidx].sample(rng);

      if (model.route(full_row) == id) {
        ok = true;
        break;
      }
    }
    if (ok) {
      rows.row(accepted) = full_row.transpose();
      leaves(accepted) = static_cast<int>(id);
      ++accepted;
    } else {
      ++discarded;
    }
  }
  return {rows.topRows(accepted), leaves.head(accepted), discarded};
}

}  // namespace

bool Evidence::empty() const {
  for (const auto& b : numeric)
    if (b) return false;
  for (const auto& a : symbolic)
    if (a) return false;
  return true;
}

void Evidence::validate() const {
  for (const auto& b : numeric)
    if (b && !(b->lo <= b->hi))
      throw std::invalid_argument("Evidence: interval with lo > hi");
}

bool Evidence::consistent(const IcTreeModel& model, const Eigen::VectorXd& full_row) const {
  const auto& num_cols = model.numeric_columns();
  for (std::size_t k = 0; k < numeric.size(); ++k) {
    if (!numeric[k]) continue;
    const double x = full_row(num_cols[k]);
    if (x < numeric[k]->lo || x > numeric[k]->hi) return false;
  }
  const auto& sym_cols = model.symbolic_columns();
  for (std::size_t s = 0; s < symbolic.size(); ++s) {
    if (!symbolic[s]) continue;
    if (!(*symbolic[s])[static_cast<std::size_t>(static_cast<int>(full_row(sym_cols[s])))])
      return false;
  }
  return true;
}

double log_density(const IcTreeModel& model, const Eigen::VectorXd& full_row) {
  if (full_row.size() != static_cast<Eigen::Index>(model.columns().size()))
    throw std::invalid_argument("log_density: row width does not match schema");
  return mixture_log_density(model, base_views(model), full_row);
}

LogLikelihoodReport avg_log_likelihood(const IcTreeModel& model, const Dataset& data) {
  const std::vector<LeafView> views = base_views(model);
  double sum = 0.0;
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double ll = mixture_log_density(model, views, data.row(i));
    if (ll != -kInf) {
      sum += ll;
      ++positive;
    }
  }
  LogLikelihoodReport report;
  report.n = data.n();
  report.zero_fraction = static_cast<double>(data.n() - positive) / static_cast<double>(data.n());
  if (positive > 0) report.avg = sum / static_cast<double>(positive);
  return report;
}

SampleResult sample(const IcTreeModel& model, Eigen::Index n, Rng& rng, int max_retries) {
  return sample_views(model, base_views(model), n, rng, max_retries);
}

SampleResult sample(const RestrictedModel& view, Eigen::Index n, Rng& rng, int max_retries) {
  return sample_views(view.base(), restricted_views(view), n, rng, max_retries);
}

RestrictedModel apply_evidence(const IcTreeModel& model, const Evidence& ev) {
  if (ev.numeric.size() != static_cast<std::size_t>(model.num_numeric()) ||
      ev.symbolic.size() != static_cast<std::size_t>(model.num_symbolic()))
    throw std::invalid_argument("apply_evidence: evidence shape does not match model");
  ev.validate();

  const Eigen::Index n_leaves = model.leaf_count();
  RestrictedModel out;
  out.base_ = &model;
  out.weights_ = Eigen::VectorXd::Zero(n_leaves);
  out.comps_.resize(static_cast<std::size_t>(n_leaves));
  out.syms_.resize(static_cast<std::size_t>(n_leaves));

  for (Eigen::Index id = 0; id < n_leaves; ++id) {
    const Leaf& leaf = model.leaf(id);
    auto& comps = out.comps_[static_cast<std::size_t>(id)];
    auto& syms = out.syms_[static_cast<std::size_t>(id)];
    comps = leaf.component_dists;
    syms = leaf.symbolic_dists;

    double retained = leaf.weight;
    bool alive = true;

    for (const auto& [k, value] : leaf.dropped) {
      const auto& bound = ev.numeric[static_cast<std::size_t>(k)];
      if (!bound) continue;
      const double tol = kDroppedTol * std::max(1.0, std::abs(value));
      if (value < bound->lo - tol || value > bound->hi + tol) {
        alive = false;
        break;
      }
    }

    for (std::size_t s = 0; alive && s < syms.size(); ++s) {
      const auto& mask = ev.symbolic[s];
      if (!mask) continue;
      auto restricted = leaf.symbolic_dists[s].restrict(*mask);
      if (!restricted) {
        alive = false;
        break;
      }
      retained *= leaf.symbolic_dists[s].retained_mass(*mask);
      syms[s] = std::move(*restricted);
    }

    if (alive && !leaf.kept.empty()) {
      // Evidence box per kept column; unbounded dimensions take the leaf's
      // own back-mapped support so the vertex set stays finite.
      const auto m_eff = static_cast<Eigen::Index>(leaf.kept.size());
      Eigen::VectorXd box_lo(m_eff), box_hi(m_eff);
      for (Eigen::Index pos = 0; pos < m_eff; ++pos) {
        const auto& bound = ev.numeric[static_cast<std::size_t>(leaf.kept[static_cast<std::size_t>(pos)])];
        if (bound) {
          box_lo(pos) = bound->lo;
          box_hi(pos) = bound->hi;
        } else {
          const Interval r = back_mapped_range(leaf, leaf.component_dists, pos);
          box_lo(pos) = r.lo;
          box_hi(pos) = r.hi;
        }
      }
      // Axis-aligned bounding box of the transformed parallelepiped, then
      // restriction of each component to it.
      for (Eigen::Index j = 0; alive && j < m_eff; ++j) {
        double s_lo = 0.0, s_hi = 0.0;
        for (Eigen::Index pos = 0; pos < m_eff; ++pos) {
          const double w = leaf.transform.unmixing(j, pos);
          const double a = w * (box_lo(pos) - leaf.transform.mean(pos));
          const double b = w * (box_hi(pos) - leaf.transform.mean(pos));
          s_lo += std::min(a, b);
          s_hi += std::max(a, b);
        }
        auto restricted = leaf.component_dists[static_cast<std::size_t>(j)].restrict(s_lo, s_hi);
        if (!restricted) {
          alive = false;
          break;
        }
        retained *= leaf.component_dists[static_cast<std::size_t>(j)].retained_mass(s_lo, s_hi);
        comps[static_cast<std::size_t>(j)] = std::move(*restricted);
      }
    }

    if (alive) out.weights_(id) = retained;
  }

  const double total = out.weights_.sum();
  if (!(total > 0.0))
    throw InconsistentEvidence("apply_evidence: evidence excludes every leaf");
  out.weights_ /= total;
  return out;
}

MarginalEstimate marginal_probability(const IcTreeModel& model, const Evidence& ev,
                                      Eigen::Index n_samples, Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("marginal_probability: need n_samples >= 1");
  ev.validate();
  const SampleResult drawn = sample(model, n_samples, rng);
  const Eigen::Index n = drawn.rows.rows();
  Eigen::Index consistent = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (ev.consistent(model, drawn.rows.row(i).transpose())) ++consistent;

  MarginalEstimate est;
  est.n_samples = n;
  est.consistent = consistent;
  est.estimate = n > 0 ? static_cast<double>(consistent) / static_cast<double>(n) : 0.0;
  est.std_error = n > 0 ? std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(n))
                        : 0.0;
  return est;
}

MomentsReport conditional_moments(const IcTreeModel& model, const Evidence& ev,
                                  const std::vector<int>& orders, Eigen::Index n_samples,
                                  Rng& rng) {
  if (n_samples < 2) throw std::invalid_argument("conditional_moments: need n_samples >= 2");
  for (const int r : orders)
    if (r < 1) throw std::invalid_argument("conditional_moments: orders must be >= 1");

  const RestrictedModel view = apply_evidence(model, ev);
  const SampleResult drawn = sample(view, n_samples, rng);

  std::vector<Eigen::Index> kept_rows;
  for (Eigen::Index i = 0; i < drawn.rows.rows(); ++i)
    if (ev.consistent(model, drawn.rows.row(i).transpose())) kept_rows.push_back(i);
  const auto n = static_cast<Eigen::Index>(kept_rows.size());
  if (n < 2)
    throw InsufficientAcceptance("conditional_moments: fewer than 2 samples satisfy the evidence");

  MomentsReport report;
  report.orders = orders;
  report.accepted = n;
  report.drawn = n_samples;
  report.moments.resize(static_cast<std::size_t>(model.num_numeric()));

  const auto& num_cols = model.numeric_columns();
  Eigen::VectorXd values(n);
  for (Eigen::Index k = 0; k < model.num_numeric(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i)
      values(i) = drawn.rows(kept_rows[static_cast<std::size_t>(i)], num_cols[static_cast<std::size_t>(k)]);
    const double mean = values.mean();
    auto& column_moments = report.moments[static_cast<std::size_t>(k)];
    for (const int r : orders) {
      MomentEstimate est;
      if (r == 1) {
        est.value = mean;
        const double var = (values.array() - mean).square().sum() / static_cast<double>(n - 1);
        est.std_error = std::sqrt(var / static_cast<double>(n));
      } else {
        const Eigen::ArrayXd dev = (values.array() - mean).pow(r);
        est.value = r == 2 ? dev.sum() / static_cast<double>(n - 1)
                           : dev.sum() / static_cast<double>(n);
        const double dev_mean = dev.mean();
        const double dev_var = (dev - dev_mean).square().sum() / static_cast<double>(n - 1);
        est.std_error = std::sqrt(dev_var / static_cast<double>(n));
      }
      column_moments.push_back(est);
    }
  }
  return report;
}

MpeResult mpe(const IcTreeModel& model, const std::optional<Evidence>& ev) {
  std::optional<RestrictedModel> restricted;
  std::vector<LeafView> views;
  if (ev && !ev->empty()) {
    restricted = apply_evidence(model, *ev);  // may throw InconsistentEvidence
    views = restricted_views(*restricted);
  } else {
    views = base_views(model);
  }

  Eigen::Index best_id = -1;
  double best_density = 0.0;
  for (Eigen::Index id = 0; id < static_cast<Eigen::Index>(views.size()); ++id) {
    const LeafView& v = views[static_cast<std::size_t>(id)];
    if (!(v.weight > 0.0)) continue;
    double d = v.weight * std::exp(v.leaf->transform.log_abs_det_unmixing);
    for (const auto& comp : *v.comps) d *= comp.max_density();
    for (const auto& sym : *v.syms) d *= sym.max_pmf();
    if (d > best_density) {
      best_density = d;
      best_id = id;
    }
  }
  if (best_id < 0) throw InconsistentEvidence("mpe: no leaf carries positive mass");

  const LeafView& v = views[static_cast<std::size_t>(best_id)];
  const Leaf& leaf = *v.leaf;
  const auto m_eff = static_cast<Eigen::Index>(leaf.kept.size());

  Eigen::VectorXd region_lo(m_eff), region_hi(m_eff);
  for (Eigen::Index j = 0; j < m_eff; ++j) {
    const auto intervals = (*v.comps)[static_cast<std::size_t>(j)].max_density_intervals();
    region_lo(j) = intervals.front().lo;  // ties resolved to the lowest interval
    region_hi(j) = intervals.front().hi;
  }

  const auto& num_cols = model.numeric_columns();
  const auto assemble_numeric = [&](const Eigen::VectorXd& s) {
    Eigen::VectorXd x_num(model.num_numeric());
    if (m_eff > 0) {
      const Eigen::VectorXd x_kept = inverse_transform(leaf.transform, s);
      for (std::size_t k = 0; k < leaf.kept.size(); ++k)
        x_num(leaf.kept[k]) = x_kept(static_cast<Eigen::Index>(k));
    }
    for (const auto& [k, value] : leaf.dropped) x_num(k) = value;
    return x_num;
  };

  MpeResult result;
  result.leaf = best_id;
  result.density = best_density;

  const Eigen::Index n_vertices = Eigen::Index(1) << m_eff;
  result.region_vertices.resize(n_vertices, model.num_numeric());
  Eigen::VectorXd corner(m_eff);
  for (Eigen::Index mask = 0; mask < n_vertices; ++mask) {
    for (Eigen::Index j = 0; j < m_eff; ++j)
      corner(j) = (mask >> j) & 1 ? region_hi(j) : region_lo(j);
    result.region_vertices.row(mask) = assemble_numeric(corner).transpose();
  }

  const Eigen::VectorXd centroid = 0.5 * (region_lo + region_hi);
  const Eigen::VectorXd x_num = assemble_numeric(centroid);
  result.representative.resize(static_cast<Eigen::Index>(model.columns().size()));
  for (Eigen::Index k = 0; k < model.num_numeric(); ++k)
    result.representative(num_cols[static_cast<std::size_t>(k)]) = x_num(k);
  const auto& sym_cols = model.symbolic_columns();
  for (std::size_t s = 0; s < sym_cols.size(); ++s)
    result.representative(sym_cols[s]) = (*v.syms)[s].mode().front();
  return result;
}

Eigen::MatrixXd grid_density(const IcTreeModel& model, Eigen::Index col_x, Eigen::Index col_y,
                             int resolution, const std::optional<Evidence>& ev,
                             Eigen::Index mc_samples, Rng& rng) {
  if (resolution < 1) throw std::invalid_argument("grid_density: resolution must be >= 1");
  if (col_x == col_y || col_x < 0 || col_y < 0 || col_x >= model.num_numeric() ||
      col_y >= model.num_numeric())
    throw std::invalid_argument("grid_density: need two distinct numeric columns");

  std::optional<RestrictedModel> restricted;
  std::vector<LeafView> views;
  if (ev && !ev->empty()) {
    restricted = apply_evidence(model, *ev);
    views = restricted_views(*restricted);
  } else {
    views = base_views(model);
  }

  const std::vector<Interval> ranges = column_ranges(model, views);
  std::vector<Eigen::Index> other;
  for (Eigen::Index k = 0; k < model.num_numeric(); ++k)
    if (k != col_x && k != col_y) other.push_back(k);

  // Uniform proposals with a volume factor marginalize the remaining numeric
  // dimensions; symbolic factors integrate to one and drop out.
  double volume = 1.0;
  for (const Eigen::Index k : other) {
    const auto& r = ranges[static_cast<std::size_t>(k)];
    if (r.hi > r.lo) volume *= r.hi - r.lo;
  }
  const Eigen::Index n_proposals = other.empty() ? 1 : std::max<Eigen::Index>(1, mc_samples);
  Eigen::MatrixXd proposals(n_proposals, static_cast<Eigen::Index>(other.size()));
  for (Eigen::Index i = 0; i < n_proposals; ++i)
    for (std::size_t k = 0; k < other.size(); ++k) {
      const auto& r = ranges[static_cast<std::size_t>(other[k])];
      proposals(i, static_cast<Eigen::Index>(k)) =
          r.hi > r.lo ? rng.uniform(r.lo, r.hi) : r.lo;
    }

  const auto& rx = ranges[static_cast<std::size_t>(col_x)];
  const auto& ry = ranges[static_cast<std::size_t>(col_y)];
  Eigen::MatrixXd out(static_cast<Eigen::Index>(resolution) * resolution, 3);
  Eigen::VectorXd x_num(model.num_numeric());
  Eigen::Index row = 0;
  for (int iy = 0; iy < resolution; ++iy) {
    const double y = ry.lo + (iy + 0.5) * (ry.hi - ry.lo) / resolution;
    for (int ix = 0; ix < resolution; ++ix) {
      const double x = rx.lo + (ix + 0.5) * (rx.hi - rx.lo) / resolution;
      double acc = 0.0;
      for (Eigen::Index p = 0; p < n_proposals; ++p) {
        x_num(col_x) = x;
        x_num(col_y) = y;
        for (std::size_t k = 0; k < other.size(); ++k)
          x_num(other[k]) = proposals(p, static_cast<Eigen::Index>(k));
        double density = 0.0;
        for (const LeafView& v : views) {
          if (!(v.weight > 0.0)) continue;
          const double ll = leaf_numeric_log_density(v, x_num);
          if (ll != -kInf) density += v.weight * std::exp(ll);
        }
        acc += density;
      }
      out(row, 0) = x;
      out(row, 1) = y;
      out(row, 2) = volume * acc / static_cast<double>(n_proposals);
      ++row;
    }
  }
  return out;
}

}  // namespace ictree
