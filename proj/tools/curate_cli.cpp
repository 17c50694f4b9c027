// curate: headless driver for ingestion, batch runs, simulation, evaluation,
// export and the HTTP API. Human text goes to stdout, errors as JSON to
// stderr with a nonzero exit code.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "curate/config.hpp"
#include "curate/error.hpp"
#include "curate/eval.hpp"
#include "curate/http_api.hpp"
#include "curate/parser_service.hpp"
#include "curate/sampler.hpp"
#include "curate/service.hpp"

namespace {

using namespace curate;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long long> jobs;
  std::optional<long long> k;
  std::optional<long long> m;
  std::optional<long long> window;
  std::optional<double> overlap;
  std::string format;
  std::string out;
  bool json = false;
  bool exact_case = false;
  bool print_config = false;
  std::string db = "curate.db";
  std::string project;
  std::string mock_fixture;
};

void add_common(CLI::App& cmd, Common& c) {
  cmd.add_option("--config", c.config_path, "key = value configuration file");
  cmd.add_option("--seed", c.seed, "random seed");
  cmd.add_option("--jobs", c.jobs, "worker threads (0 = logical cores)");
  cmd.add_option("--k", c.k, "correction pool size");
  cmd.add_option("--m", c.m, "demonstration examples per prompt");
  cmd.add_option("--window", c.window, "chunk window in characters (0 = 80% of the LLM context)");
  cmd.add_option("--overlap", c.overlap, "chunk overlap fraction in [0, 1)");
  cmd.add_option("--format", c.format, "csv | json");
  cmd.add_option("--out", c.out, "output file");
  cmd.add_flag("--json", c.json, "structured JSON on stdout");
  cmd.add_flag("--exact-case", c.exact_case, "compare cells without case folding");
  cmd.add_flag("--print-config", c.print_config, "print the effective configuration and exit");
  cmd.add_option("--mock-fixture", c.mock_fixture, "fixture file for the mock LLM");
}

Config effective_config(const Common& c) {
  Config cfg = Config::defaults();
  if (!c.config_path.empty()) cfg.merge(Config::load(c.config_path));
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  if (c.jobs) cfg.set("jobs", std::to_string(*c.jobs));
  if (c.k) cfg.set("k", std::to_string(*c.k));
  if (c.m) cfg.set("m", std::to_string(*c.m));
  if (c.window) cfg.set("window", std::to_string(*c.window));
  if (c.overlap) {
    std::ostringstream os;
    os << *c.overlap;
    cfg.set("overlap", os.str());
  }
  if (c.exact_case) cfg.set("exact_case", "true");
  if (!c.mock_fixture.empty()) cfg.set("mock_fixture", c.mock_fixture);
  return cfg;
}

void write_output(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << bytes;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Engine wiring shared by the store-backed commands.
struct Engine {
  Config config;
  Store store;
  ParserServices parsers;
  std::unique_ptr<LlmProvider> llm;
  std::unique_ptr<EmbeddingProvider> embedding;
  CurationService service;

  Engine(const Config& cfg, const std::string& db)
      : config(cfg), store(db), parsers(make_parser_services(cfg)), llm(make_llm_provider(cfg)),
        embedding(make_embedding_provider(cfg)),
        service(store, ServiceDeps{llm.get(), embedding.get(), parsers.clients(), {}},
                ServiceSettings::from_config(cfg)) {}

  std::int64_t project_id(const std::string& name) {
    for (const auto& p : service.projects()) {
      if (p.name == name) return p.id;
    }
    throw Error(ErrorCode::NotFound, "no project named " + name);
  }
};

int cmd_ingest(const Common& c, const std::string& schema_path, const std::vector<std::string>& inputs) {
  Engine e(effective_config(c), c.db);
  if (c.project.empty()) throw Error(ErrorCode::InvalidConfig, "--project is required");
  std::vector<DocumentSource> docs;
  for (const auto& p : inputs) docs.push_back({"", p});
  std::int64_t id = 0;
  bool exists = false;
  for (const auto& p : e.service.projects()) {
    if (p.name == c.project) {
      id = p.id;
      exists = true;
    }
  }
  if (!exists) {
    if (schema_path.empty()) throw Error(ErrorCode::SchemaParseError, "--schema is required for a new project");
    id = e.service.create_project(c.project, read_text(schema_path)).id;
  }
  const IngestSummary sum = e.service.add_documents(id, docs);
  if (c.json) {
    std::cout << nlohmann::json{{"project_id", id}, {"ingested", sum.ingested}, {"failed", sum.failed}}.dump(2)
              << "\n";
  } else {
    std::cout << "project " << c.project << " (" << id << "): " << sum.ingested.size() << " ingested, "
              << sum.failed.size() << " failed\n";
    for (const auto& [doc, why] : sum.failed) std::cout << "  failed " << doc << ": " << why << "\n";
  }
  return sum.ingested.empty() && !sum.failed.empty() ? 1 : 0;
}

int cmd_run(const Common& c, const std::string& phase, const std::vector<std::string>& doc_ids) {
  Engine e(effective_config(c), c.db);
  const std::int64_t id = e.project_id(c.project);
  std::vector<std::string> ids = doc_ids;
  if (ids.empty()) {
    for (const auto& d : e.service.project(id).documents) {
      if (d.parsed) ids.push_back(d.doc_id);
    }
  }
  const BatchView b = e.service.run_batch(id, ids, phase_from_string(phase));
  if (c.json) {
    std::cout << batch_json(b).dump(2) << "\n";
  } else {
    std::cout << "batch " << b.batch.id << " (sample " << b.batch.seq << ", " << to_string(b.batch.phase)
              << "): " << b.records.size() << " records from " << b.batch.doc_ids.size()
              << " documents, pool version " << b.batch.pool_version_used << "\n";
    for (const auto& [doc, why] : b.batch.failures) std::cout << "  failed " << doc << ": " << why << "\n";
  }
  return 0;
}

int cmd_simulate(const Common& c, const std::string& dataset) {
  const Config cfg = effective_config(c);
  Schema schema;
  auto docs = load_simulation_dataset(dataset, &schema);
  auto llm = make_llm_provider(cfg);
  const ServiceSettings settings = ServiceSettings::from_config(cfg);

  SimulationConfig sim;
  sim.schema = schema;
  sim.pool_size = static_cast<std::size_t>(cfg.get_int("k", 10));
  sim.shots = static_cast<std::size_t>(cfg.get_int("m", 1));
  sim.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  sim.llm = llm.get();
  sim.generation = settings.generation;
  TableDump gold;
  gold.schema = schema.names();
  for (const auto& d : docs) gold.documents.push_back({d.document.doc_id, d.gold});
  sim.dataset = std::move(docs);

  const SimulationResult result = simulate_curation(sim);
  const EvalReport report = evaluate_dataset(result.table, gold, {cfg.get_bool("exact_case", false)});
  if (!c.out.empty()) write_output(c.out, serialize_dump(result.table));
  for (const auto& [doc, why] : result.errors) std::cerr << "generation failed for " << doc << ": " << why << "\n";
  if (c.json) {
    auto j = report_to_json(report);
    j["generation_errors"] = result.errors;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "dataset\tk\tm\tP\tR\tF1\tChrF\n";
    char row[256];
    std::snprintf(row, sizeof row, "%s\t%zu\t%zu\t%.2f\t%.2f\t%.2f\t%.2f\n",
                  std::filesystem::path(dataset).filename().string().c_str(), sim.pool_size, sim.shots,
                  report.micro.precision, report.micro.recall, report.micro.f1, report.mean_chrf);
    std::cout << row;
  }
  return 0;
}

int cmd_eval(const Common& c, const std::string& pred, const std::string& gold) {
  const Config cfg = effective_config(c);
  const EvalReport report = evaluate_dataset(load_dump(pred), load_dump(gold), {cfg.get_bool("exact_case", false)});
  const auto j = report_to_json(report);
  if (!c.out.empty()) write_output(c.out, j.dump(2) + "\n");
  if (c.json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << report_to_text(report, std::filesystem::path(gold).stem().string());
  }
  return 0;
}

int cmd_export(const Common& c, bool include_irrelevant) {
  Engine e(effective_config(c), c.db);
  const ExportFormat format = export_format_from_string(c.format.empty() ? "json" : c.format);
  const std::string bytes = e.service.export_project(e.project_id(c.project), format, include_irrelevant);
  if (c.out.empty()) {
    std::cout << bytes;
  } else {
    write_output(c.out, bytes);
  }
  return 0;
}

ApiServer* g_server = nullptr;

int cmd_serve(const Common& c, const std::string& host, int port) {
  Engine e(effective_config(c), c.db);
  ApiOptions opts;
  if (auto token = e.config.secret_from_env("api_token_env")) opts.bearer_token = *token;
  ApiServer server(e.service, opts);
  const int bound = server.bind(host, port);
  std::cerr << "listening on " << host << ":" << bound << "\n";
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  server.listen();
  g_server = nullptr;
  return 0;
}

void print_error(std::string_view code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schema-driven record extraction and curation engine"};
  app.require_subcommand(1);

  Common common;
  std::string schema_path;
  std::vector<std::string> inputs;
  std::string phase = "PILOT";
  std::vector<std::string> doc_ids;
  std::string dataset;
  std::string pred;
  std::string gold;
  bool include_irrelevant = false;
  std::string host = "127.0.0.1";
  int port = 8080;

  auto* ingest = app.add_subcommand("ingest", "create a project if needed and ingest documents");
  add_common(*ingest, common);
  ingest->add_option("--db", common.db, "store file");
  ingest->add_option("--project", common.project, "project name")->required();
  ingest->add_option("--schema", schema_path, "schema file (CSV header or JSON columns) for a new project");
  ingest->add_option("inputs", inputs, "source files");

  auto* run = app.add_subcommand("run", "run a pilot or batch phase");
  add_common(*run, common);
  run->add_option("--db", common.db, "store file");
  run->add_option("--project", common.project, "project name")->required();
  run->add_option("--phase", phase, "PILOT | BATCH")->check(CLI::IsMember({"PILOT", "BATCH"}));
  run->add_option("doc_ids", doc_ids, "documents (default: every ingested document)");

  auto* simulate = app.add_subcommand("simulate", "replay the curation loop on a labelled dataset");
  add_common(*simulate, common);
  simulate->add_option("--dataset", dataset, "directory with gold.json and docs/")->required();

  auto* eval = app.add_subcommand("eval", "score a predicted table dump against gold");
  add_common(*eval, common);
  eval->add_option("--pred", pred, "predicted dump")->required();
  eval->add_option("--gold", gold, "gold dump")->required();

  auto* exp = app.add_subcommand("export", "export a project's records");
  add_common(*exp, common);
  exp->add_option("--db", common.db, "store file");
  exp->add_option("--project", common.project, "project name")->required();
  exp->add_flag("--include-irrelevant", include_irrelevant, "keep records marked irrelevant");

  auto* serve = app.add_subcommand("serve", "serve the HTTP API");
  add_common(*serve, common);
  serve->add_option("--db", common.db, "store file");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port (0 = any free port)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("InvalidArguments", e.what());
    return 2;
  }

  try {
    if (common.print_config) {
      std::cout << effective_config(common).serialize();
      return 0;
    }
    if (*ingest) return cmd_ingest(common, schema_path, inputs);
    if (*run) return cmd_run(common, phase, doc_ids);
    if (*simulate) return cmd_simulate(common, dataset);
    if (*eval) return cmd_eval(common, pred, gold);
    if (*exp) return cmd_export(common, include_irrelevant);
    if (*serve) return cmd_serve(common, host, port);
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return 1;
  }
  return 0;
}
