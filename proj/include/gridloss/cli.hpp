#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"

#include "gridloss/covariance.hpp"
#include "gridloss/errors.hpp"
#include "gridloss/graph.hpp"
#include "gridloss/io.hpp"
#include "gridloss/loss.hpp"
#include "gridloss/montecarlo.hpp"
#include "gridloss/optimize.hpp"
#include "gridloss/placement.hpp"

namespace gridloss::cli {

/// Command-line misuse that CLI11's grammar cannot express (empty node lists,
/// malformed k ranges, csv where only json exists). Maps to exit code 64.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline int parse_int_strict(std::string_view s) {
  int value = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || p != end) {
    throw UsageError("invalid integer '" + std::string(s) + "'");
  }
  return value;
}

/// Comma list of node ids, e.g. "0,2,5". Ids are in the graph file's base.
inline std::vector<int> parse_node_list(const std::string& s) {
  std::vector<int> nodes;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::size_t end = comma == std::string::npos ? s.size() : comma;
    if (end == start) throw UsageError("empty entry in node list '" + s + "'");
    nodes.push_back(parse_int_strict(std::string_view(s).substr(start, end - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (nodes.empty()) throw UsageError("node list must not be empty");
  return nodes;
}

/// k specification: a single value "3", a comma list "1,2,5", or an inclusive
/// range "1..4".
inline std::vector<int> parse_k_spec(const std::string& s) {
  const std::size_t dots = s.find("..");
  if (dots != std::string::npos) {
    const int lo = parse_int_strict(std::string_view(s).substr(0, dots));
    const int hi = parse_int_strict(std::string_view(s).substr(dots + 2));
    if (lo > hi) throw UsageError("empty k range '" + s + "'");
    std::vector<int> ks;
    for (int k = lo; k <= hi; ++k) ks.push_back(k);
    return ks;
  }
  return parse_node_list(s);
}

inline std::vector<int> to_internal(const std::vector<int>& ids, int base) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (int v : ids) out.push_back(v - base);
  return out;
}

inline std::vector<int> to_file_base(const std::vector<int>& ids, int base) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (int v : ids) out.push_back(v + base);
  return out;
}

inline void require_json(const std::string& format) {
  if (format != "json") {
    throw UsageError("csv output is only available for average-k and scaling-curve");
  }
}

}  // namespace detail

/// Runs one CLI invocation. Exit codes: 0 success (report on `out`), 64 usage
/// error, 65 domain error (disconnected graph, non-PSD covariance, ...),
/// 66 missing or unparsable file. Identical arguments and files always emit
/// byte-identical output.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal load sharing against expected transport losses on weighted graphs",
               "gridloss"};
  app.require_subcommand(1);

  std::string graph_path;
  std::string cov_path;
  std::string mu_path;
  std::string alpha_path;
  std::string penalty_path;
  std::string nodes_arg;
  std::string k_spec;
  std::string format = "json";
  std::vector<int> pair_arg;
  std::vector<int> edge_arg;
  double xi = 0.0;
  double beta = 0.0;
  int k_max = 1;
  int samples = 10000;
  int threads = 1;
  std::uint64_t seed = 0;

  const auto add_graph = [&](CLI::App* sub) {
    sub->add_option("--graph", graph_path, "graph JSON file")->required();
  };
  const auto add_cov = [&](CLI::App* sub) {
    sub->add_option("--cov", cov_path, "covariance JSON file")->required();
  };
  const auto add_mu = [&](CLI::App* sub) {
    sub->add_option("--mu", mu_path, "nominal load profile JSON file (default: zero)");
  };
  const auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format, "output format (default json)")
        ->check(CLI::IsMember({"json", "csv"}));
  };
  const auto add_control = [&](CLI::App* sub) {
    CLI::Option* a = sub->add_option("--alpha", alpha_path, "control vector JSON file");
    CLI::Option* n =
        sub->add_option("--nodes", nodes_arg, "equal-share support, comma list of node ids");
    a->excludes(n);
    n->excludes(a);
  };
  const auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", threads, "worker threads (env GRIDLOSS_THREADS)")
        ->envname("GRIDLOSS_THREADS")
        ->check(CLI::Range(1, 4096));
  };

  CLI::App* cmd_pinv =
      app.add_subcommand("pseudoinverse", "Laplacian pseudoinverse with resistance summary");
  add_graph(cmd_pinv);
  add_format(cmd_pinv);

  CLI::App* cmd_res =
      app.add_subcommand("resistance", "effective resistance between a pair of nodes");
  add_graph(cmd_res);
  add_format(cmd_res);
  cmd_res->add_option("--pair", pair_arg, "two node ids")->expected(2)->required();

  CLI::App* cmd_loss =
      app.add_subcommand("expected-loss", "expected transport loss of a fixed control");
  add_graph(cmd_loss);
  add_cov(cmd_loss);
  add_mu(cmd_loss);
  add_control(cmd_loss);
  add_format(cmd_loss);

  CLI::App* cmd_opt =
      app.add_subcommand("optimize", "loss-minimizing load-sharing control");
  add_graph(cmd_opt);
  add_cov(cmd_opt);
  add_format(cmd_opt);
  cmd_opt->add_option("--nodes", nodes_arg,
                      "controllable node ids, comma list (default: all nodes)");
  cmd_opt->add_option("--penalty", penalty_path, "usage-penalty JSON file (default: P=I, q=0)");
  CLI::Option* opt_xi =
      cmd_opt->add_option("--xi", xi, "usage-penalty weight (default 0)")
          ->check(CLI::NonNegativeNumber);

  CLI::App* cmd_avg = app.add_subcommand(
      "average-k", "placement-averaged equal-share loss, closed form and enumeration");
  add_graph(cmd_avg);
  add_cov(cmd_avg);
  add_format(cmd_avg);
  cmd_avg->add_option("--k", k_spec, "placement sizes: N, N..M, or comma list")->required();

  CLI::App* cmd_curve =
      app.add_subcommand("scaling-curve", "loss-reduction ratios H_k/H_1 for k = 1..k-max");
  add_graph(cmd_curve);
  add_cov(cmd_curve);
  add_format(cmd_curve);
  cmd_curve->add_option("--k-max", k_max, "largest placement size")
      ->required()
      ->check(CLI::PositiveNumber);

  CLI::App* cmd_sim =
      app.add_subcommand("simulate", "Monte Carlo estimate of the expected loss");
  add_graph(cmd_sim);
  add_cov(cmd_sim);
  add_mu(cmd_sim);
  add_control(cmd_sim);
  add_format(cmd_sim);
  add_threads(cmd_sim);
  cmd_sim->add_option("--samples", samples, "sample count (default 10000)")
      ->check(CLI::Range(2, 1 << 30));
  cmd_sim->add_option("--seed", seed, "RNG seed (default 0)");

  CLI::App* cmd_perturb =
      app.add_subcommand("perturb-edge", "add weight to one edge and report the effect");
  add_graph(cmd_perturb);
  add_format(cmd_perturb);
  cmd_perturb->add_option("--edge", edge_arg, "two node ids")->expected(2)->required();
  cmd_perturb->add_option("--beta", beta, "weight to add (> 0)")->required();

  try {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("gridloss");
    for (const std::string& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 64;
  }

  try {
    const io::GraphFile gf = io::load_graph(graph_path);
    const int base = gf.index_base;
    const LaplacianPair lp = build_laplacian(gf.graph);
    const int n = lp.node_count();

    // Shared ingestion for the subcommands that need it.
    const auto load_cov = [&] {
      CovarianceModel cov = io::load_covariance(cov_path, n);
      if (cov.size() != n) {
        throw DimensionMismatch("covariance size " + std::to_string(cov.size()) +
                                " does not match graph size " + std::to_string(n));
      }
      return cov;
    };
    const auto load_mu = [&] {
      LoadProfile mu = mu_path.empty() ? LoadProfile::zero(n) : io::load_mu(mu_path);
      if (mu.size() != n) {
        throw DimensionMismatch("load profile size " + std::to_string(mu.size()) +
                                " does not match graph size " + std::to_string(n));
      }
      return mu;
    };
    const auto load_control = [&]() -> ControlVector {
      if (!alpha_path.empty()) {
        ControlVector alpha = io::load_alpha(alpha_path);
        if (alpha.size() != n) {
          throw DimensionMismatch("control size " + std::to_string(alpha.size()) +
                                  " does not match graph size " + std::to_string(n));
        }
        return alpha;
      }
      if (!nodes_arg.empty()) {
        return ControlVector::equal_share(
            n, detail::to_internal(detail::parse_node_list(nodes_arg), base));
      }
      throw UsageError("one of --alpha or --nodes is required");
    };

    if (cmd_pinv->parsed()) {
      detail::require_json(format);
      out << "{\"n\":" << n << ",\"index_base\":" << base
          << ",\"trace\":" << io::fmt_double(lp.pinv.trace())
          << ",\"total_effective_resistance\":"
          << io::fmt_double(total_effective_resistance(lp))
          << ",\"pinv\":" << io::json_matrix(lp.pinv) << "}\n";
    } else if (cmd_res->parsed()) {
      detail::require_json(format);
      const double r = effective_resistance(lp, pair_arg[0] - base, pair_arg[1] - base);
      out << "{\"index_base\":" << base << ",\"pair\":[" << pair_arg[0] << ","
          << pair_arg[1] << "],\"resistance\":" << io::fmt_double(r) << "}\n";
    } else if (cmd_loss->parsed()) {
      detail::require_json(format);
      const LossReport report = expected_loss(lp, load_cov(), load_mu(), load_control());
      out << "{\"stochastic\":" << io::fmt_double(report.expected_stochastic_loss)
          << ",\"deterministic\":" << io::fmt_double(report.deterministic_loss)
          << ",\"total\":" << io::fmt_double(report.expected_total) << "}\n";
    } else if (cmd_opt->parsed()) {
      detail::require_json(format);
      const CovarianceModel cov = load_cov();
      std::vector<int> controllable(n);
      for (int i = 0; i < n; ++i) controllable[i] = i;
      if (!nodes_arg.empty()) {
        controllable = detail::to_internal(detail::parse_node_list(nodes_arg), base);
      }
      const ControllableSet set(controllable, n);

      const bool penalized = opt_xi->count() > 0 || !penalty_path.empty();
      const OptimalControl result = [&] {
        if (penalized) {
          const PenaltyModel pen = penalty_path.empty()
                                       ? PenaltyModel::identity(n, xi)
                                       : io::load_penalty(penalty_path, n, xi);
          return optimize_penalized(lp, cov, pen, set);
        }
        return set.is_full() ? optimize_full(lp, cov) : optimize_subset(lp, cov, set);
      }();

      out << "{\"index_base\":" << base << ",\"support\":"
          << io::json_int_array(detail::to_file_base(result.alpha.support(), base))
          << ",\"alpha\":" << io::json_array(result.alpha.values())
          << ",\"gamma\":" << io::fmt_double(result.lagrange_multiplier)
          << ",\"objective\":" << io::fmt_double(result.objective_value) << "}\n";
    } else if (cmd_avg->parsed()) {
      const CovarianceModel cov = load_cov();
      const std::vector<int> ks = detail::parse_k_spec(k_spec);
      std::vector<PlacementAverage> rows;
      rows.reserve(ks.size());
      for (int k : ks) rows.push_back(average_loss_k(lp, cov, k));

      if (format == "csv") {
        out << "k,closed_form,enumerated\n";
        for (const PlacementAverage& row : rows) {
          out << row.k << "," << io::fmt_double(row.closed_form) << ",";
          if (row.enumerated) out << io::fmt_double(*row.enumerated);
          out << "\n";
        }
      } else {
        out << "{\"c1\":" << io::fmt_double(rows.front().c1)
            << ",\"c2\":" << io::fmt_double(rows.front().c2) << ",\"results\":[";
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (i) out << ",";
          out << "{\"k\":" << rows[i].k
              << ",\"closed_form\":" << io::fmt_double(rows[i].closed_form)
              << ",\"enumerated\":";
          if (rows[i].enumerated) {
            out << io::fmt_double(*rows[i].enumerated);
          } else {
            out << "null";
          }
          out << "}";
        }
        out << "]}\n";
      }
    } else if (cmd_curve->parsed()) {
      const ScalingCurve curve = scaling_curve(lp, load_cov(), k_max);
      if (format == "csv") {
        out << "k,ratio,asymptotic\n";
        for (std::size_t i = 0; i < curve.k_values.size(); ++i) {
          out << curve.k_values[i] << "," << io::fmt_double(curve.ratios[i]) << ","
              << io::fmt_double(curve.asymptotic[i]) << "\n";
        }
      } else {
        out << "{\"gamma\":" << io::fmt_double(curve.gamma)
            << ",\"asymptote_offset\":" << io::fmt_double(curve.asymptote_offset)
            << ",\"asymptote_slope\":" << io::fmt_double(curve.asymptote_slope)
            << ",\"h1\":" << io::fmt_double(curve.h1) << ",\"points\":[";
        for (std::size_t i = 0; i < curve.k_values.size(); ++i) {
          if (i) out << ",";
          out << "{\"k\":" << curve.k_values[i]
              << ",\"ratio\":" << io::fmt_double(curve.ratios[i])
              << ",\"asymptotic\":" << io::fmt_double(curve.asymptotic[i]) << "}";
        }
        out << "]}\n";
      }
    } else if (cmd_sim->parsed()) {
      detail::require_json(format);
      const MCEstimate est = estimate_expected_loss(lp, load_cov(), load_mu(), load_control(),
                                                    samples, seed, threads);
      out << "{\"mean\":" << io::fmt_double(est.mean)
          << ",\"std_error\":" << io::fmt_double(est.std_error)
          << ",\"n_samples\":" << est.n_samples << ",\"seed\":" << est.seed << "}\n";
    } else if (cmd_perturb->parsed()) {
      detail::require_json(format);
      const int u = edge_arg[0] - base;
      const int v = edge_arg[1] - base;
      const EdgePerturbation pert(n, u, v, beta);
      const LaplacianPair after = perturb_edge(lp, pert);
      const auto summary = [&](const LaplacianPair& state) {
        return std::string("{\"resistance\":") +
               io::fmt_double(effective_resistance(state, u, v)) +
               ",\"trace\":" + io::fmt_double(state.pinv.trace()) +
               ",\"total_effective_resistance\":" +
               io::fmt_double(total_effective_resistance(state)) + "}";
      };
      out << "{\"index_base\":" << base << ",\"edge\":[" << edge_arg[0] << "," << edge_arg[1]
          << "],\"beta\":" << io::fmt_double(beta) << ",\"before\":" << summary(lp)
          << ",\"after\":" << summary(after) << "}\n";
    }
    return 0;
  } catch (const UsageError& e) {
    err << "gridloss: usage error: " << e.what() << "\n";
    return 64;
  } catch (const ParseError& e) {
    err << "gridloss: file error: " << e.what() << "\n";
    return 66;
  } catch (const Error& e) {
    err << "gridloss: " << e.what() << "\n";
    return 65;
  }
}

}  // namespace gridloss::cli
