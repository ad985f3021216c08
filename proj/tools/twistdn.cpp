#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "twistdn/config.hpp"
#include "twistdn/dn.hpp"
#include "twistdn/inverse.hpp"
#include "twistdn/verify.hpp"

namespace {

using namespace twistdn;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  int threads = 0;
};

void attach_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "key=value config file");
  cmd->add_option("--set", opts.sets, "override, e.g. --set a=0.3 (repeatable)");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--threads", opts.threads,
                  "worker threads (0 = TWISTDN_THREADS or hardware)");
}

RunConfig load_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig{}
                                           : RunConfig::from_file(opts.config_path);
  for (const auto& kv : opts.sets) cfg.apply_override(kv);
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.threads > 0) cfg.threads = opts.threads;
  return cfg;
}

std::string prepare_out_dir(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  save_text_atomic(cfg.canonical_text(), cfg.out_dir + "/config_used.txt");
  return cfg.out_dir;
}

int cmd_mesh(const RunConfig& cfg) {
  const std::string dir = prepare_out_dir(cfg);
  const Mesh mesh = build_mesh(cfg.make_section(), cfg.target_h);
  save_mesh(mesh, dir + "/mesh.txt");
  std::cout << "mesh: " << mesh.num_vertices() << " vertices, "
            << mesh.num_triangles() << " triangles, h = " << mesh.h << " -> "
            << dir << "/mesh.txt\n";
  return 0;
}

int cmd_dn(const RunConfig& cfg) {
  const std::string dir = prepare_out_dir(cfg);
  const Mesh mesh = build_mesh(cfg.make_section(), cfg.target_h);
  const BoundaryBasis basis = BoundaryBasis::from_mesh(mesh, cfg.K);
  DnMatrix m;
  if (cfg.variant == "standard")
    m = dn_mode_matrix(mesh, cfg.a, cfg.xi, basis);
  else if (cfg.variant == "reduced")
    m = dn_reduced_matrix(mesh, cfg.a, basis);
  else if (cfg.variant == "bullet")
    m = dn_bullet_mode_matrix(mesh, cfg.a, cfg.xi, basis);
  else
    throw std::invalid_argument("config: unknown variant '" + cfg.variant + "'");
  save_text_atomic(dn_matrix_to_json(m), dir + "/dn_matrix.json");
  save_text_atomic(dn_diagonal_csv(m), dir + "/dn_diagonal.csv");
  if (cfg.export_family && cfg.variant != "reduced") {
    const DnFamily fam = dn_3d_synthesize(
        mesh, cfg.a, basis, cfg.sigma_g, cfg.make_grid(),
        cfg.variant == "bullet" ? DnVariant::bullet : DnVariant::standard,
        cfg.threads);
    save_text_atomic(dn_family_to_json(fam), dir + "/dn_family.json");
  }
  std::cout << "dn: " << to_string(m.variant) << " matrix at a = " << m.a
            << ", xi = " << m.xi << ", K = " << m.K << " -> " << dir
            << "/dn_matrix.json\n";
  return 0;
}

int cmd_invert(const RunConfig& cfg) {
  const std::string dir = prepare_out_dir(cfg);
  const Mesh mesh = build_mesh(cfg.make_section(), cfg.target_h);
  const BoundaryBasis basis = BoundaryBasis::from_mesh(mesh, cfg.K);
  const RecoveryMode mode =
      cfg.mode == "reduced" ? RecoveryMode::reduced : RecoveryMode::family;
  Measurement meas;
  if (mode == RecoveryMode::family)
    meas = make_family_measurement(mesh, basis, cfg.sigma_g, cfg.make_grid(),
                                   cfg.a, cfg.noise, cfg.seed, cfg.threads);
  else
    meas = make_reduced_measurement(mesh, basis, cfg.a, cfg.noise, cfg.seed);
  ForwardCache cache;
  const RecoveryResult rec = recover_rate(meas, cfg.search_lo, cfg.search_hi,
                                          mode, &cache, cfg.threads);
  save_text_atomic(recovery_to_json(rec), dir + "/recovery.json");
  save_text_atomic(misfit_curve_csv(rec), dir + "/misfit_curve.csv");
  std::cout << "invert: a_hat = " << rec.a_hat << " (true " << cfg.a
            << ", residual " << rec.residual << ")"
            << (rec.sign_ambiguous ? " [sign ambiguous]" : "")
            << (rec.multi_minimum_warning ? " [multi-minimum warning]" : "")
            << " -> " << dir << "/recovery.json\n";
  return 0;
}

int cmd_stability(const RunConfig& cfg) {
  const std::string dir = prepare_out_dir(cfg);
  const Mesh mesh = build_mesh(cfg.make_section(), cfg.target_h);
  const BoundaryBasis basis = BoundaryBasis::from_mesh(mesh, cfg.K);
  const double delta = mesh.max_vertex_radius();
  std::vector<std::pair<double, double>> pairs;
  for (size_t i = 0; i < cfg.a_values.size(); ++i)
    for (size_t j = i + 1; j < cfg.a_values.size(); ++j)
      pairs.emplace_back(cfg.a_values[i], cfg.a_values[j]);
  for (double a : cfg.a_values) {
    const double b = a + cfg.close_pair_gap;
    if (std::abs(b) * delta < 1.0) pairs.emplace_back(a, b);
  }
  const StabilityReport report = stability_experiment(
      pairs, mesh, basis, cfg.sigma_g, cfg.make_grid(), cfg.threads);
  save_text_atomic(stability_to_json(report), dir + "/stability.json");
  save_text_atomic(stability_ratio_csv(report), dir + "/stability_ratios.csv");
  std::cout << "stability: C_hat = " << report.C_hat << " over "
            << report.pairs.size() << " pairs -> " << dir << "/stability.json\n";
  return 0;
}

int cmd_approx(const RunConfig& cfg) {
  const std::string dir = prepare_out_dir(cfg);
  const Mesh mesh = build_mesh(cfg.make_section(), cfg.target_h);
  const BoundaryBasis basis = BoundaryBasis::from_mesh(mesh, cfg.K);
  std::vector<double> values = cfg.a_values;
  const ApproximationTable table = approximation_experiment(
      values, mesh, basis, cfg.sigma_g, cfg.make_grid(), cfg.threads);
  save_text_atomic(approximation_to_json(table), dir + "/approximation.json");
  save_text_atomic(approximation_csv(table), dir + "/approximation.csv");
  std::cout << "approx: C_approx = " << table.C_approx << " over "
            << table.rows.size() << " rates -> " << dir << "/approximation.csv\n";
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  const std::string dir = prepare_out_dir(cfg);
  const VerifyReport report = run_verify(cfg);
  for (const auto& c : report.checks)
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail
              << "\n";
  save_text_atomic(verify_report_to_json(report), dir + "/verify.json");
  std::cout << (report.all_pass ? "verify: all checks passed"
                                : "verify: FAILURES detected")
            << " -> " << dir << "/verify.json\n";
  return report.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twistdn: DN maps of the straightened twisted waveguide and "
               "recovery of the twist rate"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto* mesh_cmd = app.add_subcommand("mesh", "generate a cross-section mesh");
  auto* dn_cmd = app.add_subcommand("dn", "compute a DN matrix");
  auto* invert_cmd = app.add_subcommand("invert", "recover the twist rate");
  auto* stability_cmd =
      app.add_subcommand("stability", "empirical Lipschitz stability constant");
  auto* approx_cmd =
      app.add_subcommand("approx", "surrogate-map approximation experiment");
  auto* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
  for (auto* cmd :
       {mesh_cmd, dn_cmd, invert_cmd, stability_cmd, approx_cmd, verify_cmd})
    attach_common(cmd, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    const RunConfig cfg = load_config(opts);
    if (mesh_cmd->parsed()) return cmd_mesh(cfg);
    if (dn_cmd->parsed()) return cmd_dn(cfg);
    if (invert_cmd->parsed()) return cmd_invert(cfg);
    if (stability_cmd->parsed()) return cmd_stability(cfg);
    if (approx_cmd->parsed()) return cmd_approx(cfg);
    if (verify_cmd->parsed()) return cmd_verify(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
