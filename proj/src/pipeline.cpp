#include "buckrom/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "buckrom/error.hpp"
#include "json.hpp"

namespace buckrom {

using nlohmann::json;

ArtifactPaths::ArtifactPaths(const std::filesystem::path& dir, const std::string& name)
    : artifact(dir / (name + ".brom")),
      sigma_csv(dir / (name + "_sigma.csv")),
      deim_sigma_csv(dir / (name + "_deim_sigma.csv")),
      train_csv(dir / (name + "_train.csv")),
      reduced_csv(dir / (name + "_online_rb.csv")),
      deim_csv(dir / (name + "_online_deim.csv")),
      full_csv(dir / (name + "_online_hf.csv")),
      plot_svg(dir / (name + "_online.svg")),
      report_json(dir / (name + "_report.json")),
      dir_(dir),
      name_(name) {}

std::filesystem::path ArtifactPaths::error_csv(std::size_t branch) const {
  return dir_ / (name_ + "_error_" + std::to_string(branch) + ".csv");
}

std::filesystem::path ArtifactPaths::states_bin(std::size_t branch) const {
  return dir_ / (name_ + "_states_" + std::to_string(branch) + ".bin");
}

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + dir.string());
}

std::ofstream open_out(const std::filesystem::path& p, bool binary = false) {
  std::ofstream f(p, binary ? std::ios::binary : std::ios::out);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + p.string());
  return f;
}

std::string describe(const ParameterPoint& p) {
  std::ostringstream os;
  os << "E=" << p.young << " nu=" << p.poisson;
  if (p.mu_g > 0.0) os << " mu_g=" << p.mu_g;
  return os.str();
}

template <class F>
auto with_context(const ParameterPoint& p, const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(what) + " branch (" + describe(p) + "): " + e.what());
  }
}

DiagramColumns columns(const Scenario& s) {
  return {s.geometric != GeometricMapKind::kNone, s.young_range.has_value()};
}

json base_json(const ParameterPoint& p) {
  return {{"E", p.young}, {"nu", p.poisson}, {"mu_g", p.mu_g}};
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void update_report(const std::filesystem::path& path, const Scenario& s, const char* phase,
                   json section) {
  json doc = json::object();
  {
    std::ifstream f(path);
    if (f) {
      try {
        doc = json::parse(f);
      } catch (const json::exception&) {
        doc = json::object();
      }
      if (!doc.is_object()) doc = json::object();
    }
  }
  doc["scenario"] = s.name;
  doc["description"] = s.description;
  doc[phase] = std::move(section);
  auto f = open_out(path);
  f << doc.dump(2) << '\n';
}

void check_artifact(const ArtifactBundle& b, const Mesh& mesh, const HyperelasticProblem& problem) {
  if (b.mesh_fingerprint != mesh.fingerprint() || b.dofs != problem.size()) {
    std::ostringstream os;
    os << "artifact was built for another discretization (fingerprint " << std::hex
       << b.mesh_fingerprint << " vs " << mesh.fingerprint() << std::dec << ", " << b.dofs
       << " vs " << problem.size() << " DoFs); rerun offline";
    throw Error(ErrorCode::kStaleArtifact, os.str());
  }
}

}  // namespace

OfflineSummary run_offline(const Scenario& s, const std::filesystem::path& out_dir) {
  validate_scenario(s);
  ensure_dir(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const ArtifactPaths paths(out_dir, s.name);
  auto mesh = build_mesh(s);
  HyperelasticProblem problem(build_problem_spec(s, mesh));

  OfflineSummary sum;
  SnapshotSet set;
  std::vector<Branch> branches;
  FullOrderSystem full(problem);
  double hf_seconds = 0.0;
  int hf_points = 0;
  for (const auto& p : training_points(s)) {
    Branch b = with_context(p, "offline", [&] {
      problem.set_parameters(p);
      ContinuationPlan plan = make_plan(s, problem, p, s.n_train);
      plan.keep_states = true;
      return continuation_sweep(full, plan, s.newton);
    });
    append_snapshots(set, problem, b);
    hf_seconds += b.wall_seconds;
    hf_points += static_cast<int>(b.points.size());
    sum.critical.push_back(b.critical);
    for (auto& pt : b.points) pt.u.resize(0);
    branches.push_back(std::move(b));
  }
  sum.branches = static_cast<int>(branches.size());
  sum.snapshots = static_cast<int>(set.count());
  sum.full_seconds_per_mu = hf_points > 0 ? hf_seconds / hf_points : 0.0;

  ArtifactBundle bundle;
  bundle.mesh_fingerprint = mesh->fingerprint();
  bundle.dofs = problem.size();
  bundle.basis = pod_compress(set.S, s.pod_tolerance);
  sum.basis_dimension = static_cast<int>(bundle.basis.dimension());
  if (s.online.deim) {
    DeimSettings ds;
    ds.greedy_tolerance = s.online.deim_tolerance;
    ds.modes = s.online.deim_modes;
    ds.tangent_snapshots = s.tangent_snapshots;
    const DenseMatrix F = deim_snapshots(problem, set, bundle.basis, ds.tangent_snapshots);
    bundle.deim = deim_build(F, ds);
    sum.deim_modes = bundle.deim->active;
    sum.deim_available = bundle.deim->available();
  }
  write_artifact(paths.artifact, bundle);
  {
    auto f = open_out(paths.sigma_csv);
    write_sigma_csv(f, bundle.basis.sigma);
  }
  if (bundle.deim) {
    auto f = open_out(paths.deim_sigma_csv);
    write_sigma_csv(f, bundle.deim->sigma);
  }
  {
    auto f = open_out(paths.train_csv);
    write_diagram_csv(f, branches, columns(s));
  }
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json rep;
  rep["dofs"] = problem.size();
  rep["elements"] = mesh->num_elements();
  rep["material"] = material_kind_name(s.material);
  rep["geometry"] = geometry_kind_name(s.geometry.kind);
  rep["training_branches"] = sum.branches;
  rep["points_per_branch"] = s.n_train;
  rep["snapshots"] = sum.snapshots;
  rep["pod_tolerance"] = s.pod_tolerance;
  rep["basis_dimension"] = sum.basis_dimension;
  if (bundle.deim) {
    rep["deim_modes"] = sum.deim_modes;
    rep["deim_available_modes"] = sum.deim_available;
  }
  rep["t_hf_per_mu"] = sum.full_seconds_per_mu;
  rep["wall_seconds"] = sum.wall_seconds;
  if (s.reference_train > 0) rep["train_scaling_factor"] = double(s.reference_train) / s.n_train;
  json crit = json::array();
  for (std::size_t k = 0; k < branches.size(); ++k) {
    crit.push_back({{"base", base_json(branches[k].base)}, {"mu_star", opt(branches[k].critical)}});
  }
  rep["critical"] = crit;
  update_report(paths.report_json, s, "offline", rep);
  return sum;
}

OnlineSummary run_online(const Scenario& s, const std::filesystem::path& out_dir) {
  validate_scenario(s);
  const ArtifactPaths paths(out_dir, s.name);
  auto mesh = build_mesh(s);
  HyperelasticProblem problem(build_problem_spec(s, mesh));
  const ArtifactBundle bundle = read_artifact(paths.artifact);
  check_artifact(bundle, *mesh, problem);
  if (s.online.deim && !bundle.deim) {
    throw Error(ErrorCode::kStaleArtifact, "scenario enables DEIM but the artifact has no DEIM model");
  }

  OnlineSummary sum;
  sum.basis_dimension = static_cast<int>(bundle.basis.dimension());
  sum.mu_step = (s.mu_max - s.mu_min) / (s.online.count - 1);
  ReducedSystem reduced(problem, bundle.basis);
  std::optional<DeimSystem> deim;
  if (s.online.deim) {
    deim.emplace(problem, bundle.basis, *bundle.deim);
    sum.deim_support = deim->support_size();
  }

  std::vector<Branch> rb_branches, deim_branches, full_branches;
  std::vector<RbErrorReport> errors;
  double t_rb = 0.0, t_deim = 0.0, t_full = 0.0;
  int n_pts = 0;
  const auto points = online_points(s);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    OnlineBranchSummary bs;
    bs.base = p;
    problem.set_parameters(p);
    ContinuationPlan plan = make_plan(s, problem, p, s.online.count);
    plan.keep_states = s.online.compare_full || s.dump_states;
    Branch rb;
    if (s.online.compare_full) {
      RbErrorReport rep = with_context(p, "online", [&] {
        return rb_error_sweep(problem, reduced, plan, s.newton);
      });
      rb = std::move(rep.reduced);
      bs.critical_full = rep.full.critical;
      bs.max_error = rep.max_error;
      bs.mean_error = rep.mean_error;
      bs.argmax_mu = rep.argmax_mu;
      bs.max_reference_norm = rep.max_reference_norm;
      t_full += rep.full.wall_seconds;
      for (auto& pt : rep.full.points) pt.u.resize(0);
      full_branches.push_back(std::move(rep.full));
      rep.reduced = Branch();
      errors.push_back(std::move(rep));
    } else {
      rb = with_context(p, "online", [&] { return reduced_sweep(reduced, plan, s.newton); });
    }
    t_rb += rb.wall_seconds;
    bs.critical_reduced = rb.critical;
    n_pts += static_cast<int>(rb.points.size());
    for (const auto& pt : rb.points) bs.all_converged = bs.all_converged && pt.converged;

    if (deim) {
      deim->set_modes(bundle.deim->active);
      Branch bd = with_context(p, "DEIM", [&] { return deim_sweep(*deim, plan, s.newton); });
      t_deim += bd.wall_seconds;
      bs.critical_deim = bd.critical;
      bs.deim_modes = deim->modes();
      double smax = 0.0, dmax = 0.0;
      for (std::size_t j = 0; j < rb.points.size(); ++j) {
        smax = std::max(smax, std::abs(rb.points[j].s));
        if (rb.points[j].converged && bd.points[j].converged) {
          dmax = std::max(dmax, std::abs(bd.points[j].s - rb.points[j].s));
        }
      }
      bs.deim_discrepancy = smax > 0.0 ? dmax / smax : dmax;
      for (auto& pt : bd.points) pt.u.resize(0);
      deim_branches.push_back(std::move(bd));
    }
    if (s.dump_states) {
      auto f = open_out(paths.states_bin(k), true);
      write_branch_states(f, rb);
    }
    for (auto& pt : rb.points) pt.u.resize(0);
    rb_branches.push_back(std::move(rb));
    sum.branches.push_back(bs);
  }
  if (n_pts > 0) {
    sum.reduced_seconds_per_mu = t_rb / n_pts;
    sum.deim_seconds_per_mu = deim ? t_deim / n_pts : 0.0;
    sum.full_seconds_per_mu = s.online.compare_full ? t_full / n_pts : 0.0;
  }

  const DiagramColumns cols = columns(s);
  {
    auto f = open_out(paths.reduced_csv);
    write_diagram_csv(f, rb_branches, cols);
  }
  if (deim) {
    auto f = open_out(paths.deim_csv);
    write_diagram_csv(f, deim_branches, cols);
  }
  if (s.online.compare_full) {
    auto f = open_out(paths.full_csv);
    write_diagram_csv(f, full_branches, cols);
    for (std::size_t k = 0; k < errors.size(); ++k) {
      auto e = open_out(paths.error_csv(k));
      write_error_csv(e, errors[k]);
    }
  }
  {
    std::vector<PlotSeries> series;
    for (const auto& b : rb_branches) {
      PlotSeries ps;
      ps.label = "RB " + describe(b.base);
      for (const auto& pt : b.points) {
        if (!pt.converged) continue;
        ps.x.push_back(pt.mu);
        ps.y.push_back(pt.s);
      }
      series.push_back(std::move(ps));
    }
    auto f = open_out(paths.plot_svg);
    write_svg_plot(f, series, s.name + ": bifurcation diagram", "mu",
                   std::string("s = ") + functional_name(s.functional));
  }

  json rep;
  rep["basis_dimension"] = sum.basis_dimension;
  rep["online_points_per_branch"] = s.online.count;
  rep["mu_step"] = sum.mu_step;
  if (s.reference_online > 0) rep["online_scaling_factor"] = double(s.reference_online) / s.online.count;
  rep["t_rb_per_mu"] = sum.reduced_seconds_per_mu;
  if (deim) {
    rep["t_rb_deim_per_mu"] = sum.deim_seconds_per_mu;
    rep["deim_support_elements"] = sum.deim_support;
    rep["elements"] = mesh->num_elements();
  }
  if (s.online.compare_full) {
    rep["t_hf_per_mu"] = sum.full_seconds_per_mu;
    if (sum.reduced_seconds_per_mu > 0.0) {
      rep["speedup_rb"] = sum.full_seconds_per_mu / sum.reduced_seconds_per_mu;
    }
    if (deim && sum.deim_seconds_per_mu > 0.0) {
      rep["speedup_rb_deim"] = sum.full_seconds_per_mu / sum.deim_seconds_per_mu;
    }
  }
  json arr = json::array();
  for (const auto& b : sum.branches) {
    json j;
    j["base"] = base_json(b.base);
    j["mu_star_rb"] = opt(b.critical_reduced);
    j["all_converged"] = b.all_converged;
    if (deim) {
      j["mu_star_rb_deim"] = opt(b.critical_deim);
      j["deim_modes"] = b.deim_modes;
      j["deim_relative_discrepancy"] = b.deim_discrepancy;
    }
    if (s.online.compare_full) {
      j["mu_star_hf"] = opt(b.critical_full);
      j["max_error"] = b.max_error;
      j["mean_error"] = b.mean_error;
      j["argmax_error_mu"] = b.argmax_mu;
      j["max_reference_norm"] = b.max_reference_norm;
    }
    arr.push_back(j);
  }
  rep["branches"] = arr;
  update_report(paths.report_json, s, "online", rep);
  return sum;
}

CompareSummary compare_diagrams(const Diagram& a, const Diagram& b, double threshold) {
  const auto ba = diagram_branches(a);
  const auto bb = diagram_branches(b);
  if (ba.size() != bb.size()) {
    std::ostringstream os;
    os << "diagrams have " << ba.size() << " and " << bb.size() << " branches";
    throw Error(ErrorCode::kGridMismatch, os.str());
  }
  CompareSummary c;
  for (std::size_t k = 0; k < ba.size(); ++k) {
    const auto& pa = ba[k].points;
    const auto& pb = bb[k].points;
    if (pa.size() != pb.size()) {
      std::ostringstream os;
      os << "branch " << k << ": " << pa.size() << " vs " << pb.size() << " points";
      throw Error(ErrorCode::kGridMismatch, os.str());
    }
    double ds = 0.0;
    for (std::size_t j = 0; j < pa.size(); ++j) {
      if (std::abs(pa[j].mu - pb[j].mu) > 1e-12 * (1.0 + std::abs(pa[j].mu))) {
        std::ostringstream os;
        os << "branch " << k << ", row " << j << ": mu " << pa[j].mu << " vs " << pb[j].mu;
        throw Error(ErrorCode::kGridMismatch, os.str());
      }
      if (pa[j].converged && pb[j].converged) ds = std::max(ds, std::abs(pa[j].s - pb[j].s));
    }
    c.base_a.push_back(ba[k].base);
    c.base_b.push_back(bb[k].base);
    c.critical_a.push_back(detect_critical(ba[k], threshold));
    c.critical_b.push_back(detect_critical(bb[k], threshold));
    c.max_abs_ds.push_back(ds);
  }
  return c;
}

std::string compare_report_json(const CompareSummary& c) {
  json doc;
  json rows = json::array();
  for (std::size_t k = 0; k < c.max_abs_ds.size(); ++k) {
    json r;
    r["branch"] = k;
    r["a"] = {{"base", base_json(c.base_a[k])}, {"mu_star", opt(c.critical_a[k])}};
    r["b"] = {{"base", base_json(c.base_b[k])}, {"mu_star", opt(c.critical_b[k])}};
    r["max_abs_ds"] = c.max_abs_ds[k];
    std::string order = "undetermined";
    if (c.critical_a[k] && c.critical_b[k]) {
      const double x = *c.critical_a[k], y = *c.critical_b[k];
      order = x < y ? "a<b" : (x > y ? "a>b" : "a=b");
    }
    r["ordering"] = order;
    rows.push_back(r);
  }
  doc["branches"] = rows;
  // Ordering across all branches of both inputs, by mu*.
  json all = json::array();
  for (std::size_t k = 0; k < c.max_abs_ds.size(); ++k) {
    all.push_back({{"label", "a" + std::to_string(k)}, {"mu_star", opt(c.critical_a[k])}});
    all.push_back({{"label", "b" + std::to_string(k)}, {"mu_star", opt(c.critical_b[k])}});
  }
  json table = json::array();
  for (const auto& x : all) {
    json row;
    row["label"] = x["label"];
    for (const auto& y : all) {
      std::string rel = "?";
      if (!x["mu_star"].is_null() && !y["mu_star"].is_null()) {
        const double u = x["mu_star"], v = y["mu_star"];
        rel = u < v ? "<" : (u > v ? ">" : "=");
      }
      row[y["label"].get<std::string>()] = rel;
    }
    table.push_back(row);
  }
  doc["ordering_table"] = table;
  return doc.dump(2);
}

std::filesystem::path mesh_export(const Scenario& s, const std::filesystem::path& out_dir) {
  validate_scenario(s);
  ensure_dir(out_dir);
  auto mesh = build_mesh(s);
  const auto path = out_dir / (s.name + ".vtk");
  auto f = open_out(path);
  write_vtk(f, *mesh);
  return path;
}

}  // namespace buckrom
