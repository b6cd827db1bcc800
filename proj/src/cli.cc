#include "qii/cli.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qii/bench.h"
#include "qii/error.h"
#include "qii/interface_merger.h"
#include "qii/log.h"
#include "qii/mediator.h"
#include "qii/text.h"
#include "qii/view_selector.h"

namespace qii {

namespace {

void write_output(const std::string &path, const std::string &text, std::ostream &out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
}

std::vector<std::size_t> parse_list(const std::string &text, const char *what) {
  std::vector<std::size_t> out;
  for (const auto &part : split(text, ',')) {
    auto v = coerce(std::string_view(part), DataType::kInteger);
    if (!v || v->as_int() < 1) throw ArgumentError(std::string("bad ") + what + " entry '" + part + "'");
    out.push_back(static_cast<std::size_t>(v->as_int()));
  }
  return out;
}

void log_safely(AppendLog &log, LogRecord::Kind kind, const std::string &payload,
                std::ostream &err) {
  try {
    log.append(kind, payload);
  } catch (const Error &e) {
    err << "warning: " << e.what() << "\n";
  }
}

struct QuerySession {
  UnifiedInterface unified;
  SourceDirectory sources;
  Catalog catalog;
  std::string user;
  DispatchOptions options;

  QuerySession(const std::string &unified_path, const std::string &sources_dir,
               std::string user_name, bool no_views) {
    DomainRegistry registry = DomainRegistry::with_defaults();
    unified = parse_unified(read_file(unified_path), registry);
    sources = load_sources(sources_dir);
    catalog = Catalog::build(unified, sources.stores, sources.config);
    user = std::move(user_name);
    options.use_views = !no_views;
    options.join_key = sources.join_key();
  }

  void run(const std::string &text, const std::string &format, std::ostream &out,
           std::ostream &err) const {
    auto query = modify_query(parse_query(text, unified), user, catalog);
    QueryTrace trace;
    auto results = answer_query(query, unified, sources.stores, sources.rules, options, &trace);
    for (const auto &[source, plan] : trace.dispatched.plans) {
      err << "plan " << source << ": " << plan.describe() << "\n";
    }
    for (const auto &e : results.errors) {
      if (!e.key) err << "manifest " << e.source << ": " << e.message << "\n";
    }
    out << (format == "jsonl" ? result_jsonl(results)
                              : result_csv(results, unified, options.join_key));
  }
};

}  // namespace

int run_cli(int argc, const char *const *argv, std::istream &in, std::ostream &out,
            std::ostream &err) {
  AppendLog log(AppendLog::default_path());
  {
    std::vector<std::string> args(argv, argv + argc);
    log_safely(log, LogRecord::Kind::kWeb, join(args, " "), err);
  }

  CLI::App app{"Query interface integrator for domain-specific hidden-web sources", "qii"};
  app.require_subcommand(1);

  auto *merge = app.add_subcommand("merge", "Merge source interfaces into a unified interface");
  std::vector<std::string> interface_files;
  std::string synonyms_file, merge_out;
  merge->add_option("--interfaces", interface_files, "Interface JSON files")->required();
  merge->add_option("--synonyms", synonyms_file, "Synonym table JSON");
  merge->add_option("-o,--out", merge_out, "Output file (default stdout)");

  auto *query = app.add_subcommand("query", "Answer a query through the unified interface");
  std::string unified_file, sources_dir, user, format = "csv";
  bool no_views = false;
  std::vector<std::string> query_terms;
  query->add_option("--unified", unified_file, "Unified interface JSON")->required();
  query->add_option("--sources", sources_dir, "Sources directory")->required();
  query->add_option("--user", user, "User name checked against privileges")->required();
  query->add_flag("--no-views", no_views, "Never answer from materialized views");
  query->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  query->add_option("predicates", query_terms, "attr=value terms")->required();

  auto *select = app.add_subcommand("select-views", "Greedy materialized view selection");
  std::string lattice_file;
  int k = 0;
  select->add_option("--lattice", lattice_file, "Lattice JSON")->required();
  select->add_option("-k", k, "Number of views to materialize")->required();

  auto *bench = app.add_subcommand("bench", "Access-time benchmark: view vs base join");
  std::string sizes = "10000,20000,30000,60000", keywords = "1,2,4", bench_out;
  std::uint64_t seed = 42;
  int repetitions = 11;
  bench->add_option("--sizes", sizes, "Comma-separated tuples per relation");
  bench->add_option("--keywords", keywords, "Comma-separated keyword counts");
  bench->add_option("--seed", seed, "Data generator seed");
  bench->add_option("--repetitions", repetitions, "Timed runs per cell (median reported)");
  bench->add_option("--out", bench_out, "CSV output file (default stdout)");

  auto *repl = app.add_subcommand("repl", "Interactive query loop");
  std::string repl_user = "admin";
  repl->add_option("--unified", unified_file, "Unified interface JSON")->required();
  repl->add_option("--sources", sources_dir, "Sources directory")->required();
  repl->add_option("--user", repl_user, "User name checked against privileges");
  repl->add_flag("--no-views", no_views, "Never answer from materialized views");

  auto *project = app.add_subcommand("project", "List the fields visible for a trip mode");
  std::string mode_name, modes_file;
  project->add_option("--unified", unified_file, "Unified interface JSON")->required();
  project->add_option("--mode", mode_name, "OneWay, RoundTrip, MultiCity or Package")->required();
  project->add_option("--modes", modes_file, "Mode rules JSON (default: airline rules)");

  auto *gen = app.add_subcommand("gen-data", "Write synthetic Option/Status/Passenger CSVs");
  std::size_t gen_size = 10;
  std::string gen_dir;
  gen->add_option("--size", gen_size, "Tuples per relation")->required();
  gen->add_option("--seed", seed, "Data generator seed");
  gen->add_option("--out", gen_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (merge->parsed()) {
      DomainRegistry registry = DomainRegistry::with_defaults();
      std::vector<InterfaceTree> trees;
      for (const auto &f : interface_files) trees.push_back(parse_interface(read_file(f), registry));
      SynonymTable synonyms;
      if (!synonyms_file.empty()) synonyms = SynonymTable::parse(read_file(synonyms_file));
      auto unified = merge_interfaces(trees, synonyms);
      for (const auto &w : unified.warnings) err << "warning: " << w << "\n";
      write_output(merge_out, serialize_unified(unified), out);
    } else if (query->parsed()) {
      QuerySession session(unified_file, sources_dir, user, no_views);
      auto text = join(query_terms, " ");
      log_safely(log, LogRecord::Kind::kQuery, text, err);
      session.run(text, format, out, err);
    } else if (select->parsed()) {
      auto lattice = ViewLattice::parse(read_file(lattice_file));
      auto result = greedy_select(lattice, k);
      out << result.table() << result.to_json().dump() << "\n";
    } else if (bench->parsed()) {
      BenchSpec spec{parse_list(sizes, "size"), parse_list(keywords, "keyword"), seed, repetitions};
      write_output(bench_out, bench_csv(run_bench(spec)), out);
    } else if (repl->parsed()) {
      QuerySession session(unified_file, sources_dir, repl_user, no_views);
      std::string line;
      out << "qii> " << std::flush;
      while (std::getline(in, line)) {
        auto text = std::string(trim(line));
        if (text == "quit" || text == "exit") break;
        if (!text.empty()) {
          log_safely(log, LogRecord::Kind::kQuery, text, err);
          try {
            session.run(text, "csv", out, err);
          } catch (const Error &e) {
            err << "error: " << e.what() << "\n";
          }
        }
        out << "qii> " << std::flush;
      }
      out << "\n";
    } else if (project->parsed()) {
      DomainRegistry registry = DomainRegistry::with_defaults();
      auto unified = parse_unified(read_file(unified_file), registry);
      auto rules = ModeRules::airline_defaults();
      if (!modes_file.empty()) {
        try {
          rules = ModeRules::from_json(nlohmann::ordered_json::parse(read_file(modes_file)));
        } catch (const nlohmann::json::exception &e) {
          throw ConfigError(std::string("mode rules: ") + e.what());
        }
      }
      for (const auto &f : project_for_mode(unified, parse_trip_mode(mode_name), rules)) {
        out << f << "\n";
      }
    } else if (gen->parsed()) {
      std::filesystem::create_directories(gen_dir);
      for (const auto &r : generate_data(gen_size, seed)) {
        write_output((std::filesystem::path(gen_dir) / (r.name() + ".csv")).string(),
                     relation_csv(r), out);
      }
    }
  } catch (const QueryRejected &e) {
    err << "rejected: " << e.what() << "\n";
    return kExitRejected;
  } catch (const ArgumentError &e) {
    err << "usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace qii
