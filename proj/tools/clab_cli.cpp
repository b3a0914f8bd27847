// clab: command-line front end for the library.
//
// Exit codes: 0 success, 1 acceptance criteria failed, 2 validation error,
// 3 convergence failure.

#include "clab/acceptance.hpp"
#include "clab/config.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace clab;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kCriteriaFailed = 1, kValidation = 2, kConvergence = 3;

struct Output {
  std::string dir;

  // Report on stdout, and to <dir>/<command>.report.txt when --out is given.
  void emit(const Report& R) const {
    std::cout << R.text();
    if (dir.empty()) return;
    R.write(fs::path(dir) / (R.command + ".report.txt"));
  }
  bool has_dir() const { return !dir.empty(); }
  fs::path file(const std::string& name) const { return fs::path(dir) / name; }
  void timing(const std::string& command, double seconds) const {
    if (dir.empty()) return;
    std::ofstream(file(command + ".timing.txt")) << "wall_seconds = " << fmt(std::round(seconds * 1000) / 1000) << "\n";
  }
};

std::pair<int, int> parse_grid(const std::string& s) {
  const auto x = s.find('x');
  require(x != std::string::npos, ErrorKind::ParseError, "grid must look like 128x64: " + s);
  try {
    size_t a = 0, b = 0;
    const int ns = std::stoi(s.substr(0, x), &a), nt = std::stoi(s.substr(x + 1), &b);
    require(a == x && b == s.size() - x - 1, ErrorKind::ParseError, "grid must look like 128x64: " + s);
    require(ns > 0 && nt > 0, ErrorKind::InvalidArgument, "grid sizes must be positive: " + s);
    return {ns, nt};
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::ParseError, "grid must look like 128x64: " + s);
  }
}

std::vector<int> parse_ints(const std::string& s) {
  if (s.empty()) return {};
  const IVec v = parse_class(s);
  return std::vector<int>(v.data(), v.data() + v.size());
}

MetricField load_metric(const std::string& spec, Report& R) {
  std::string text;
  MetricField m = resolve_metric(spec, &text);
  R.param("metric", spec);
  R.extra_input += text;
  return m;
}

ClosedCurve closed_geodesic(const MetricField& m, const IVec& beta, int restarts, std::uint64_t seed) {
  if (m.constant) return straight_curve(m, Vec::Zero(m.dim), beta, 16 * std::max(1, beta.cwiseAbs().maxCoeff()));
  MinGeodesicOptions opt;
  opt.restarts = restarts;
  opt.seed = seed;
  const LengthSpectrumSlice s = loop_search(m, beta, opt);
  require(s.converged, ErrorKind::ConvergenceFailure, "closed geodesic search did not converge");
  return s.minimizer;
}

// ---- subcommands ---------------------------------------------------------

struct GeodesicArgs {
  std::string metric, cls;
  int restarts = 4, points = 48, radius = 5;
  std::uint64_t seed = 20240611;
};

int run_min_geodesic(const GeodesicArgs& A, const Output& out) {
  Report R;
  R.command = "min-geodesic";
  const MetricField m = load_metric(A.metric, R);
  const IVec beta = parse_class(A.cls);
  require(beta.size() == m.dim, ErrorKind::InvalidArgument, "class dimension does not match the metric");
  R.param("class", fmt(beta));
  R.param("restarts", A.restarts);
  R.param("points", A.points);
  R.param("seed", std::to_string(A.seed));
  MinGeodesicOptions opt;
  opt.restarts = A.restarts;
  opt.points = A.points;
  opt.seed = A.seed;
  const LengthSpectrumSlice s = loop_search(m, beta, opt);
  R.result("min_length", s.min_length);
  R.result("converged", s.converged);
  R.result("partial", s.partial);
  R.result("iterations", s.iterations);
  std::string lens;
  for (double l : s.lengths) lens += (lens.empty() ? "" : ",") + fmt(l);
  R.result("lengths", lens);
  out.emit(R);
  if (out.has_dir()) {
    std::ofstream csv(out.file("min-geodesic.csv"));
    csv << "class,length,converged,iterations\n";
    for (double l : s.lengths) csv << '"' << fmt(beta) << "\"," << fmt(l) << "," << s.converged << "," << s.iterations << "\n";
  }
  return s.converged ? kOk : kConvergence;
}

int run_stable_norm(const GeodesicArgs& A, const Output& out) {
  Report R;
  R.command = "stable-norm";
  const MetricField m = load_metric(A.metric, R);
  const IVec a = parse_class(A.cls);
  require(a.size() == m.dim, ErrorKind::InvalidArgument, "class dimension does not match the metric");
  R.param("class", fmt(a));
  R.param("radius", A.radius);
  R.param("restarts", A.restarts);
  R.param("seed", std::to_string(A.seed));
  MinGeodesicOptions opt;
  opt.restarts = A.restarts;
  opt.points = A.points;
  opt.seed = A.seed;
  std::vector<LengthSpectrumSlice> visited;
  const StableNormResult S = stable_norm_full(m, a.cast<double>(), A.radius, opt, &visited);
  bool converged = true;
  for (const auto& v : visited) converged = converged && v.converged;
  R.result("stable_norm", S.value);
  R.result("argmax", fmt(S.argmax));
  R.result("last_increment", S.last_increment);
  R.result("classes", S.classes);
  R.result("converged", converged);
  out.emit(R);
  if (out.has_dir()) {
    std::ofstream csv(out.file("stable-norm.csv"));
    csv << "class,length,converged,iterations\n";
    for (const auto& v : visited)
      csv << '"' << fmt(v.beta) << "\"," << fmt(v.min_length) << "," << v.converged << "," << v.iterations << "\n";
  }
  return converged ? kOk : kConvergence;
}

struct CylinderArgs {
  std::string metric = "flat2", cls = "1,0", grid = "256x32";
  double S = 6, r0 = 0.5, r1 = 2;
  int levels = 4, restarts = 4;
  bool csv = false;
};

int run_cylinder_check(const CylinderArgs& A, const Output& out) {
  Report R;
  R.command = "cylinder-check";
  const MetricField m = load_metric(A.metric, R);
  const IVec beta = parse_class(A.cls);
  require(beta.size() == m.dim, ErrorKind::InvalidArgument, "class dimension does not match the metric");
  const auto [Ns, Nt] = parse_grid(A.grid);
  require(A.levels >= 2 && A.levels <= 6, ErrorKind::InvalidArgument, "levels must be in 2..6");
  R.param("class", fmt(beta));
  R.param("S", A.S);
  R.param("grid", A.grid);
  R.param("r0", A.r0);
  R.param("r1", A.r1);
  R.param("levels", A.levels);
  const RadialProfile P = radial_profile(A.r0, A.r1);
  const ClosedCurve geo = closed_geodesic(m, beta, A.restarts, 20240611);
  R.result("geodesic_length", geo.length);
  std::vector<double> hs, errs;
  for (int i = 0; i < A.levels; ++i) {
    const int N = 16 << i;
    const DiscreteCylinder c = build_cylinder(m, P, geo, A.S, N, N);
    hs.push_back(A.S / N);
    errs.push_back(holomorphicity_residual(c, m, P));
    R.result("residual_" + std::to_string(N), errs.back());
  }
  R.result("residual_order", acceptance::fitted_order(hs, errs));
  const DiscreteCylinder c = build_cylinder(m, P, geo, A.S, Ns, Nt);
  const EnergyReport E = energy(c, m);
  R.result("E_omega", E.E_omega);
  R.result("E_alpha", E.E_alpha);
  R.result("E", E.E);
  R.result("E_over_length", E.E / geo.length);
  out.emit(R);
  if (A.csv && out.has_dir()) {
    std::ofstream csv(out.file("cylinder.csv"));
    write_cylinder_csv(csv, c);
  }
  return kOk;
}

struct KernelArgs {
  int n = 2, m = 8;
  double k = 1, S = 8, ratio = 1e-6, twist = 0;
  std::string grid = "128x128", system = "original";
  bool export_mtx = false;
};

int run_kernel_dim(const KernelArgs& A, const Output& out) {
  Report R;
  R.command = "kernel-dim";
  const auto [Ns, Nt] = parse_grid(A.grid);
  require(A.system == "original" || A.system == "tilde", ErrorKind::InvalidArgument, "system must be original or tilde");
  require(A.twist == 0 || A.n == 3, ErrorKind::InvalidArgument, "a twist angle needs n = 3");
  R.param("n", A.n);
  R.param("k", A.k);
  R.param("S", A.S);
  R.param("grid", A.grid);
  R.param("ratio", A.ratio);
  R.param("m", A.m);
  R.param("twist", A.twist);
  R.param("system", A.system);
  OperatorGrid G;
  G.n = A.n;
  G.k = A.k;
  G.S = A.S;
  G.Ns = Ns;
  G.Nt = Nt;
  if (A.twist != 0) {
    G.O = Mat(2, 2);
    G.O << std::cos(A.twist), -std::sin(A.twist), std::sin(A.twist), std::cos(A.twist);
  }
  const CrOperator op = assemble_operator(G, A.system == "tilde" ? CrSystem::Tilde : CrSystem::Original);
  const KernelReport K = kernel_dimension(op, A.ratio, A.m);
  R.result("kernel_dimension", K.dimension);
  R.result("gap_ratio", K.gap);
  R.result("median_sigma", K.median);
  for (size_t i = 0; i < K.sigma.size(); ++i)
    R.result("sigma_" + std::to_string(i), fmt(K.sigma[i]) + (K.block[i] == 0 ? " normal" : " tangent"));
  out.emit(R);
  if (out.has_dir()) {
    std::ofstream rep(out.file("kernel-report.txt"));
    write_kernel_report(rep, K);
    if (A.export_mtx) write_matrix_market(out.file("operator.mtx").string(), op.full());
  }
  return kOk;
}

struct IndexArgs {
  int n = 2, euler = 0, c1 = 0, maslov = 0, punctures = 0;
  std::string cz_plus, cz_minus, path_csv, loop_csv;
  double good_k = 0;
  bool fredholm = false;
};

int run_index(const IndexArgs& A, const Output& out) {
  Report R;
  R.command = "index";
  require(A.fredholm || !A.path_csv.empty() || !A.loop_csv.empty() || A.good_k > 0, ErrorKind::InvalidArgument,
          "index needs --fredholm, --path, --loop or --good-metric-k");
  if (A.fredholm) {
    IndexData d;
    d.n = A.n;
    d.euler = A.euler;
    d.c1 = A.c1;
    d.maslov = A.maslov;
    d.cz_plus = parse_ints(A.cz_plus);
    d.cz_minus = parse_ints(A.cz_minus);
    d.punctures = A.punctures;
    R.param("n", A.n);
    R.param("euler", A.euler);
    R.param("c1", A.c1);
    R.param("maslov", A.maslov);
    R.param("cz_plus", A.cz_plus);
    R.param("cz_minus", A.cz_minus);
    R.param("punctures", A.punctures);
    R.result("fredholm_index", fredholm_index(d));
  }
  auto slurp = [&](const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::ParseError, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    R.extra_input += ss.str();
    return ss.str();
  };
  if (!A.path_csv.empty()) {
    R.param("path", A.path_csv);
    std::istringstream is(slurp(A.path_csv));
    R.result("conley_zehnder", conley_zehnder(read_symplectic_path_csv(is)));
  }
  if (!A.loop_csv.empty()) {
    R.param("loop", A.loop_csv);
    std::istringstream is(slurp(A.loop_csv));
    R.result("maslov", maslov_loop(read_lagrangian_loop_csv(is)));
  }
  if (A.good_k > 0) {
    R.param("good_metric_k", A.good_k);
    GoodMetricParams P;
    P.base = Mat::Identity(2, 2);
    P.beta = IVec::Unit(2, 0);
    P.k = A.good_k;
    const GoodMetric gm = good_metric(P);
    const SymplecticPath path = linearized_cogeodesic_path(gm.metric, gm.geodesic, 400);
    R.result("symplectic_drift", symplectic_drift(path) < 1e-8 ? std::string("< 1e-8") : fmt(symplectic_drift(path)));
    R.result("conley_zehnder_normal", conley_zehnder(normal_block(path)));
  }
  out.emit(R);
  return kOk;
}

struct PbArgs {
  std::string metric = "flat2", cls = "1,0", partition = "refined", grid = "100x50";
  double r = 1, eps = 0.004;
  int budget = 40, lattice = 5;
};

int run_pb_bound(const PbArgs& A, const Output& out) {
  Report R;
  R.command = "pb-bound";
  const MetricField m = load_metric(A.metric, R);
  const IVec a = parse_class(A.cls);
  require(a.size() == m.dim, ErrorKind::InvalidArgument, "class dimension does not match the metric");
  require(A.partition == "refined" || A.partition == "quartered", ErrorKind::InvalidArgument,
          "partition must be refined or quartered");
  const auto [gq, gr] = parse_grid(A.grid);
  R.param("class", fmt(a));
  R.param("r", A.r);
  R.param("partition", A.partition);
  R.param("eps", A.eps);
  R.param("budget", A.budget);
  R.param("grid", A.grid);
  R.param("lattice", A.lattice);
  BpBudget B;
  B.evaluations = A.budget;
  B.grid = {gq, gr};
  B.lattice = A.lattice;
  B.start.eps = A.eps;
  const Partition part = A.partition == "refined" ? Partition::Refined : Partition::Quartered;
  const BpEstimate E = bp_estimate(m, CohomologyClass{a, {}}, A.r, B, part);
  R.result("sup_bracket", E.sup);
  R.result("bp_lower_bound", E.bound);
  R.result("stable_norm", E.stable_norm);
  R.result("target", E.target);
  R.result("slack", E.slack);
  R.result("budget_exhausted", E.budget_exhausted);
  R.result("evaluations", E.evaluations);
  R.result("width_eps", E.widths.eps);
  R.result("width_margin", E.widths.margin);
  R.result("width_shoulder", E.widths.width);
  R.result("width_cutoff_delta", E.widths.cutoff_delta);
  R.result("width_cutoff_shoulder", E.widths.cutoff_width);
  R.result("potential_terms", static_cast<int>(E.potential.terms.size()));
  out.emit(R);
  return kOk;
}

int run_clifford(int n, const Output& out) {
  Report R;
  R.command = "clifford";
  R.param("n", n);
  const CliffordResult C = clifford(n);
  R.result("barycenter", fmt(C.barycenter));
  std::string fd;
  for (double d : C.facet_distances) fd += (fd.empty() ? "" : ",") + fmt(d);
  R.result("facet_distances", fd);
  R.result("distance", C.distance);
  R.result("r_max", C.r_max);
  R.result("product", C.product);
  R.result("consistent", C.consistent);
  out.emit(R);
  return kOk;
}

struct GraphArgs {
  std::string metric = "flat2";
  double eps = 0.1;
  int trials = 100, ball = 3, restarts = 2;
  std::uint64_t seed = 1000;
};

int run_graph_check(const GraphArgs& A, const Output& out) {
  Report R;
  R.command = "graph-check";
  const MetricField m = load_metric(A.metric, R);
  R.param("eps", A.eps);
  R.param("trials", A.trials);
  R.param("ball", A.ball);
  R.param("restarts", A.restarts);
  R.param("seed", std::to_string(A.seed));
  MinGeodesicOptions opt;
  opt.restarts = A.restarts;
  const ClosenessCheck C = closeness_family_check(m, A.eps, A.trials, A.ball, A.seed, opt);
  R.result("classes", C.classes);
  R.result("period_violations", C.period_violations);
  R.result("maslov_nonzero", C.maslov_nonzero);
  R.result("worst_ratio", C.worst_ratio);
  R.result("pass", C.period_violations == 0 && C.maslov_nonzero == 0);
  out.emit(R);
  return kOk;
}

int run_acceptance_cmd(const Output& out) {
  Report R;
  R.command = "acceptance";
  const std::vector<CriterionResult> results = run_acceptance(&std::cerr);
  int failed = 0;
  for (const auto& r : results) {
    char key[32];
    std::snprintf(key, sizeof key, "criterion_%02d", r.id);
    R.result(key, format_criterion(r));
    failed += !r.pass;
  }
  R.result("passed", static_cast<int>(results.size()) - failed);
  R.result("total", static_cast<int>(results.size()));
  out.emit(R);
  if (out.has_dir()) {
    std::ofstream t(out.file("acceptance.timing.txt"));
    for (const auto& r : results) t << "criterion_" << r.id << " = " << fmt(std::round(r.seconds * 10) / 10) << "\n";
  }
  return failed ? kCriteriaFailed : kOk;
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConvergenceFailure:
    case ErrorKind::NumericalFailure: return kConvergence;
    default: return kValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clab: closed geodesics, linearized Cauchy-Riemann operators and Lagrangian invariants on tori"};
  app.require_subcommand(1);
  Output out;
  app.add_option("--out", out.dir, "directory for report and CSV files")->check(CLI::ExistingDirectory);

  GeodesicArgs geo;
  auto geodesic_opts = [&](CLI::App* s) {
    s->add_option("--metric", geo.metric, "flat<n> or a metric config file")->required();
    s->add_option("--class", geo.cls, "class vector, e.g. 1,0")->required();
    s->add_option("--restarts", geo.restarts)->check(CLI::Range(1, 64));
    s->add_option("--points", geo.points, "samples per unit of |beta|_inf")->check(CLI::Range(16, 4096));
    s->add_option("--seed", geo.seed);
  };
  auto* mg = app.add_subcommand("min-geodesic", "minimal closed geodesic in a homology class");
  geodesic_opts(mg);
  auto* sn = app.add_subcommand("stable-norm", "stable norm of a cohomology class");
  geodesic_opts(sn);
  sn->add_option("--radius", geo.radius, "lattice radius")->check(CLI::Range(1, 12));

  CylinderArgs cyl;
  auto* cc = app.add_subcommand("cylinder-check", "holomorphicity residual and energy of the explicit cylinder");
  cc->add_option("--metric", cyl.metric);
  cc->add_option("--class", cyl.cls);
  cc->add_option("--S", cyl.S, "truncation length")->check(CLI::PositiveNumber);
  cc->add_option("--grid", cyl.grid, "energy grid, Ns x Nt");
  cc->add_option("--r0", cyl.r0)->check(CLI::PositiveNumber);
  cc->add_option("--r1", cyl.r1)->check(CLI::PositiveNumber);
  cc->add_option("--levels", cyl.levels, "grid halvings in the residual study");
  cc->add_option("--restarts", cyl.restarts)->check(CLI::Range(1, 64));
  cc->add_flag("--csv", cyl.csv, "dump the cylinder as CSV");

  KernelArgs ker;
  auto* kd = app.add_subcommand("kernel-dim", "numerical kernel dimension of the linearized operator");
  kd->add_option("--n", ker.n)->check(CLI::Range(1, 3));
  kd->add_option("--k", ker.k)->check(CLI::NonNegativeNumber);
  kd->add_option("--S", ker.S)->check(CLI::PositiveNumber);
  kd->add_option("--grid", ker.grid, "Ns x Nt");
  kd->add_option("--ratio", ker.ratio, "kernel threshold relative to the median singular value")
      ->check(CLI::Range(1e-15, 0.5));
  kd->add_option("--m", ker.m, "singular values per block")->check(CLI::Range(2, 64));
  kd->add_option("--twist", ker.twist, "monodromy rotation angle, n = 3 only");
  kd->add_option("--system", ker.system, "original or tilde");
  kd->add_flag("--export-mtx", ker.export_mtx, "write the operator in Matrix Market format");

  IndexArgs idx;
  auto* ix = app.add_subcommand("index", "Fredholm, Conley-Zehnder and Maslov indices");
  ix->add_flag("--fredholm", idx.fredholm, "evaluate the index formula");
  ix->add_option("--n", idx.n)->check(CLI::Range(1, 16));
  ix->add_option("--euler", idx.euler);
  ix->add_option("--c1", idx.c1);
  ix->add_option("--maslov", idx.maslov);
  ix->add_option("--cz-plus", idx.cz_plus, "comma separated");
  ix->add_option("--cz-minus", idx.cz_minus, "comma separated");
  ix->add_option("--punctures", idx.punctures)->check(CLI::NonNegativeNumber);
  ix->add_option("--path", idx.path_csv, "symplectic path CSV")->check(CLI::ExistingFile);
  ix->add_option("--loop", idx.loop_csv, "Lagrangian loop CSV")->check(CLI::ExistingFile);
  ix->add_option("--good-metric-k", idx.good_k, "CZ of the linearized flow for the good metric")
      ->check(CLI::PositiveNumber);

  PbArgs pb;
  auto* pbc = app.add_subcommand("pb-bound", "Poisson bracket lower bound for bp");
  pbc->add_option("--metric", pb.metric);
  pbc->add_option("--class", pb.cls);
  pbc->add_option("--r", pb.r)->check(CLI::PositiveNumber);
  pbc->add_option("--partition", pb.partition, "refined or quartered");
  pbc->add_option("--eps", pb.eps, "starting refined-partition parameter")->check(CLI::Range(1e-4, 0.2));
  pbc->add_option("--budget", pb.budget, "sup evaluations")->check(CLI::Range(1, 10000));
  pbc->add_option("--grid", pb.grid, "torus x radial resolution");
  pbc->add_option("--lattice", pb.lattice, "stable-norm lattice radius")->check(CLI::Range(1, 12));

  int clifford_n = 2;
  auto* cl = app.add_subcommand("clifford", "simplex distance check for the Clifford torus");
  cl->add_option("--n", clifford_n)->check(CLI::Range(1, 64));

  GraphArgs gr;
  auto* gc = app.add_subcommand("graph-check", "period and Maslov checks on random small graphs");
  gc->add_option("--metric", gr.metric);
  gc->add_option("--eps", gr.eps)->check(CLI::PositiveNumber);
  gc->add_option("--trials", gr.trials)->check(CLI::Range(1, 100000));
  gc->add_option("--ball", gr.ball)->check(CLI::Range(1, 8));
  gc->add_option("--restarts", gr.restarts)->check(CLI::Range(1, 64));
  gc->add_option("--seed", gr.seed);

  auto* ac = app.add_subcommand("acceptance", "run the acceptance suite");

  for (auto* s : app.get_subcommands({})) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kValidation;
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::string command;
  int code = kOk;
  try {
    if (*mg) command = "min-geodesic", code = run_min_geodesic(geo, out);
    else if (*sn) command = "stable-norm", code = run_stable_norm(geo, out);
    else if (*cc) command = "cylinder-check", code = run_cylinder_check(cyl, out);
    else if (*kd) command = "kernel-dim", code = run_kernel_dim(ker, out);
    else if (*ix) command = "index", code = run_index(idx, out);
    else if (*pbc) command = "pb-bound", code = run_pb_bound(pb, out);
    else if (*cl) command = "clifford", code = run_clifford(clifford_n, out);
    else if (*gc) command = "graph-check", code = run_graph_check(gr, out);
    else if (*ac) command = "acceptance", code = run_acceptance_cmd(out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  out.timing(command, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return code;
}
