#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nestcut/alpha_search.hpp"
#include "nestcut/cluster_tree.hpp"
#include "nestcut/errors.hpp"
#include "nestcut/export.hpp"
#include "nestcut/normalize.hpp"
#include "nestcut/perfectize.hpp"
#include "nestcut/relation_graph.hpp"
#include "nestcut/stats.hpp"
#include "nestcut/undirected_graph.hpp"

namespace fs = std::filesystem;

namespace {

// Exit codes: 0 ok, 1 usage, 2 file system, 3 malformed input text,
// 4 unrecognized format/version header, 5 violated structural guarantee.
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitParse = 3;
constexpr int kExitFormat = 4;
constexpr int kExitInvariant = 5;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw nestcut::IoError("cannot open " + path + " for reading");
  return in;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nestcut::IoError("cannot open " + path + " for writing");
  out << body;
  out.flush();
  if (!out) throw nestcut::IoError("short write on " + path);
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw nestcut::IoError("cannot create " + dir + ": " + ec.message());
}

void append_log(const std::string& dir, const std::string& line) {
  std::ofstream log(dir + "/run.log", std::ios::app);
  if (!log) throw nestcut::IoError("cannot append to " + dir + "/run.log");
  log << line << '\n';
}

// Flag values shared between the per-stage subcommands and `pipeline`.
struct StageFlags {
  std::string leverage = "none";
  std::string lift_order = "post";  // post = normalize first, then lift
  std::vector<std::string> kind_weights;
  long long budget = -1;  // < 0: unlimited
  int workers = 1;
  int fanout = 2;
  double snapshot_secs = 60.0;
  int child_threshold = 16;
  std::string root_heuristic = "central";
  std::vector<std::string> client_prefixes;
};

nestcut::KindWeights parse_kind_weights(const std::vector<std::string>& specs) {
  nestcut::KindWeights weights;
  for (const std::string& spec : specs) {
    size_t eq = spec.find('=');
    auto kind = nestcut::relation_kind_from_name(spec.substr(0, eq));
    weights.set(*kind, std::strtod(spec.c_str() + eq + 1, nullptr));
  }
  return weights;
}

// Validates KIND=REAL during flag parsing so mistakes exit as usage errors.
std::string check_kind_weight(std::string& spec) {
  size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    return "expected KIND=REAL, got '" + spec + "'";
  }
  if (!nestcut::relation_kind_from_name(spec.substr(0, eq))) {
    return "unknown relation kind in '" + spec + "'";
  }
  char* end = nullptr;
  double value = std::strtod(spec.c_str() + eq + 1, &end);
  if (*end != '\0') return "bad weight number in '" + spec + "'";
  if (value < 0.0) return "negative weight in '" + spec + "'";
  return "";
}

void do_normalize(const std::string& input, const std::string& out_dir, const StageFlags& f) {
  std::ifstream in = open_input(input);
  nestcut::RelationGraph raw = nestcut::load_relations(in, input);
  nestcut::RelationGraph merged =
      nestcut::merge_relation_kinds(raw, parse_kind_weights(f.kind_weights));
  nestcut::NormalizeConfig cfg;
  cfg.leverage = f.leverage == "log" ? nestcut::Leverage::kLog : nestcut::Leverage::kNone;
  cfg.lift_order = f.lift_order == "pre" ? nestcut::LiftOrder::kLiftThenNormalize
                                         : nestcut::LiftOrder::kNormalizeThenLift;
  nestcut::UndirectedGraph g = nestcut::build_class_graph(merged, cfg);
  ensure_out_dir(out_dir);
  std::ostringstream buf;
  nestcut::save_undirected_graph(g, buf);
  write_file(out_dir + "/normalized.txt", buf.str());
  append_log(out_dir, "normalize: artifacts=" + std::to_string(raw.artifact_count()) +
                          " arcs=" + std::to_string(raw.arc_count()) +
                          " classes=" + std::to_string(g.vertex_count()) +
                          " edges=" + std::to_string(g.edge_count()));
  std::cout << "wrote " << out_dir << "/normalized.txt\n";
}

void do_cluster(const std::string& input, const std::string& out_dir, bool resume,
                const StageFlags& f) {
  std::ifstream in = open_input(input);
  nestcut::UndirectedGraph g = nestcut::load_undirected_graph(in, input);
  ensure_out_dir(out_dir);
  nestcut::SearchOptions opt;
  opt.max_probes = f.budget;
  opt.workers = f.workers;
  opt.fanout = f.fanout;
  opt.snapshot_path = out_dir + "/search_state.txt";
  opt.snapshot_secs = f.snapshot_secs;
  opt.stop_sentinel = out_dir + "/shutdown.sig";

  auto finish = [&](nestcut::AlphaSearch& search) {
    nestcut::ClusterTree tree = search.run();
    // Final snapshot so a later --resume continues from here, not from the
    // last periodic flush.
    std::ostringstream state;
    search.save_state(state);
    write_file(opt.snapshot_path, state.str());
    std::ostringstream buf;
    tree.save(buf);
    write_file(out_dir + "/tree.txt", buf.str());
    append_log(out_dir, "cluster: probes=" + std::to_string(search.probes_done()) +
                            " flow_calls=" + std::to_string(search.flow_calls()) +
                            " remark_events=" + std::to_string(search.remark_events()));
    std::cout << "wrote " << out_dir << "/tree.txt\n";
  };

  if (resume) {
    std::string state_path = out_dir + "/search_state.txt";
    std::ifstream state = open_input(state_path);
    nestcut::AlphaSearch search = nestcut::AlphaSearch::resumed(g, opt, state, state_path);
    finish(search);
  } else {
    nestcut::AlphaSearch search(g, opt);
    finish(search);
  }
}

void do_perfectize(const std::string& tree_path, const std::string& graph_path,
                   const std::string& out_dir, const StageFlags& f) {
  std::ifstream tin = open_input(tree_path);
  nestcut::ClusterTree tree = nestcut::ClusterTree::load(tin, tree_path);
  std::ifstream gin = open_input(graph_path);
  nestcut::UndirectedGraph g = nestcut::load_undirected_graph(gin, graph_path);
  int nodes_before = tree.node_count();
  nestcut::PerfectizeOptions opt;
  opt.child_threshold = f.child_threshold;
  opt.root_heuristic = f.root_heuristic == "cycles"
                           ? nestcut::RootHeuristic::kHeavyCyclesDeep
                           : nestcut::RootHeuristic::kCentralPrioritizedBfs;
  nestcut::perfectize(tree, g, opt);
  ensure_out_dir(out_dir);
  std::ostringstream buf;
  tree.save(buf);
  write_file(out_dir + "/perfect_tree.txt", buf.str());
  append_log(out_dir, "perfectize: nodes_before=" + std::to_string(nodes_before) +
                          " nodes_after=" + std::to_string(tree.node_count()));
  std::cout << "wrote " << out_dir << "/perfect_tree.txt\n";
}

void do_export(const std::string& tree_path, const std::string& out_dir, const StageFlags& f) {
  std::ifstream tin = open_input(tree_path);
  nestcut::ClusterTree tree = nestcut::ClusterTree::load(tin, tree_path);
  nestcut::ExportOptions opt;
  opt.client_prefixes = f.client_prefixes;
  ensure_out_dir(out_dir);
  write_file(out_dir + "/tree_depth.txt",
             nestcut::export_text(tree, nestcut::TextStyle::kDepthIndent));
  write_file(out_dir + "/tree_height.txt",
             nestcut::export_text(tree, nestcut::TextStyle::kHeightIndent));
  write_file(out_dir + "/tree_bracketed.txt",
             nestcut::export_text(tree, nestcut::TextStyle::kBracketed));
  write_file(out_dir + "/tree.xml", nestcut::export_xml(tree));
  write_file(out_dir + "/treeviz.xml", nestcut::export_treeviz(tree, opt));
  write_file(out_dir + "/h3.txt", nestcut::export_h3(tree, opt));
  append_log(out_dir, "export: leaves=" + std::to_string(tree.leaf_count()) + " files=6");
  std::cout << "wrote " << out_dir << "/tree_{depth,height,bracketed}.txt, tree.xml, "
            << "treeviz.xml, h3.txt\n";
}

void do_stats(const std::string& tree_path, const std::string& out_dir) {
  std::ifstream tin = open_input(tree_path);
  nestcut::ClusterTree tree = nestcut::ClusterTree::load(tin, tree_path);
  ensure_out_dir(out_dir);
  std::string tsv = nestcut::ubiquity_tsv(tree);
  write_file(out_dir + "/stats.tsv", tsv);
  long long rows = std::count(tsv.begin(), tsv.end(), '\n') - 1;
  append_log(out_dir, "stats: prefixes=" + std::to_string(rows));
  std::cout << "wrote " << out_dir << "/stats.tsv\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical decomposition of software relation graphs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "nestcut 1.0");

  StageFlags flags;
  std::string input, out_dir, graph_path, resume_dir;

  auto add_normalize_flags = [&](CLI::App* cmd) {
    cmd->add_option("--leverage", flags.leverage, "Fan-in leverage: none or log")
        ->check(CLI::IsMember({"none", "log"}));
    cmd->add_option("--lift-order", flags.lift_order,
                    "Lift to class level pre- or post-normalization")
        ->check(CLI::IsMember({"pre", "post"}));
    cmd->add_option("--kind-weight", flags.kind_weights,
                    "Relation kind multiplier, e.g. CALL=2.5 (repeatable)")
        ->check(CLI::Validator(check_kind_weight, "KIND=REAL"));
  };
  auto add_cluster_flags = [&](CLI::App* cmd) {
    cmd->add_option("--budget", flags.budget, "Max probes issued by this run")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--workers", flags.workers, "Parallel probe workers")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--alpha-fanout", flags.fanout, "Subintervals per alpha split")
        ->check(CLI::Range(2, 1 << 20));
    cmd->add_option("--snapshot-secs", flags.snapshot_secs, "Seconds between state snapshots")
        ->check(CLI::PositiveNumber);
  };
  auto add_perfectize_flags = [&](CLI::App* cmd) {
    cmd->add_option("--child-threshold", flags.child_threshold,
                    "Re-nest inner nodes with at least this many children")
        ->check(CLI::Range(3, 1 << 30));
    cmd->add_option("--root-heuristic", flags.root_heuristic,
                    "Spanning-tree root pick: cycles or central")
        ->check(CLI::IsMember({"cycles", "central"}));
  };
  auto add_export_flags = [&](CLI::App* cmd) {
    cmd->add_option("--client-prefix", flags.client_prefixes,
                    "Label prefix marking client (non-library) code (repeatable)");
  };

  CLI::App* normalize = app.add_subcommand(
      "normalize", "Relations file -> normalized class-level undirected graph");
  normalize->add_option("--input", input, "Relations file")->required();
  normalize->add_option("--out", out_dir, "Output directory")->required();
  add_normalize_flags(normalize);

  CLI::App* cluster =
      app.add_subcommand("cluster", "Normalized graph -> cluster tree via alpha search");
  cluster->add_option("--input", input, "Normalized graph file");
  cluster->add_option("--out", out_dir, "Output directory");
  cluster->add_option("--resume", resume_dir,
                      "Continue from <dir>/search_state.txt; implies --input/--out");
  add_cluster_flags(cluster);

  CLI::App* perfectize =
      app.add_subcommand("perfectize", "Re-nest overloaded cluster-tree nodes");
  perfectize->add_option("--input", input, "Cluster tree file")->required();
  perfectize->add_option("--graph", graph_path, "Normalized graph the tree was built from")
      ->required();
  perfectize->add_option("--out", out_dir, "Output directory")->required();
  add_perfectize_flags(perfectize);

  CLI::App* export_cmd =
      app.add_subcommand("export", "Write text/XML/viewer presentations of a tree");
  export_cmd->add_option("--input", input, "Cluster tree file")->required();
  export_cmd->add_option("--out", out_dir, "Output directory")->required();
  add_export_flags(export_cmd);

  CLI::App* stats = app.add_subcommand("stats", "Prefix ubiquity ranking of a tree");
  stats->add_option("--input", input, "Cluster tree file")->required();
  stats->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* pipeline = app.add_subcommand(
      "pipeline", "normalize -> cluster -> perfectize -> export + stats in one run");
  pipeline->add_option("--input", input, "Relations file")->required();
  pipeline->add_option("--out", out_dir, "Output directory")->required();
  add_normalize_flags(pipeline);
  add_cluster_flags(pipeline);
  add_perfectize_flags(pipeline);
  add_export_flags(pipeline);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (normalize->parsed()) {
      do_normalize(input, out_dir, flags);
    } else if (cluster->parsed()) {
      bool resume = !resume_dir.empty();
      if (resume) {
        if (out_dir.empty()) out_dir = resume_dir;
        if (input.empty()) input = resume_dir + "/normalized.txt";
      }
      if (input.empty() || out_dir.empty()) {
        std::cerr << "cluster: need --input and --out, or --resume <dir>\n";
        return kExitUsage;
      }
      do_cluster(input, out_dir, resume, flags);
    } else if (perfectize->parsed()) {
      do_perfectize(input, graph_path, out_dir, flags);
    } else if (export_cmd->parsed()) {
      do_export(input, out_dir, flags);
    } else if (stats->parsed()) {
      do_stats(input, out_dir);
    } else if (pipeline->parsed()) {
      do_normalize(input, out_dir, flags);
      do_cluster(out_dir + "/normalized.txt", out_dir, false, flags);
      do_perfectize(out_dir + "/tree.txt", out_dir + "/normalized.txt", out_dir, flags);
      do_export(out_dir + "/perfect_tree.txt", out_dir, flags);
      do_stats(out_dir + "/perfect_tree.txt", out_dir);
    }
  } catch (const nestcut::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const nestcut::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const nestcut::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvariant;
  }
  return 0;
}
