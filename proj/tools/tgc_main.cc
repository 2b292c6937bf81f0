/*
 * Copyright 2026 The tgchat Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// tgc: command-line entry points. Run `tgc --help` for the subcommands.

#include <signal.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>
#include <unordered_set>

#include "CLI11.hpp"
#include "tgc/agent.h"
#include "tgc/error.h"
#include "tgc/eval.h"
#include "tgc/pipeline.h"
#include "tgc/service.h"
#include "tgc/synth.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tgc {
namespace {

// ---------------------------------------------------------------------------
// Shared options

struct DataOptions {
  std::string train;
  std::string test;
  std::string embeddings;
  std::size_t dim = 200;
  std::string oov = "hash";
  std::string extractor_config;
  std::string lexicon;
};

void AddDataOptions(CLI::App* app, DataOptions& o, bool need_test) {
  app->add_option("--train", o.train, "Training corpus (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* test = app->add_option("--test", o.test, "Test corpus (JSONL)")
                   ->check(CLI::ExistingFile);
  if (need_test) test->required();
  app->add_option("--embeddings", o.embeddings, "Word vector file")
      ->required()
      ->check(CLI::ExistingFile);
  app->add_option("--dim", o.dim, "Word vector width")->capture_default_str();
  app->add_option("--oov", o.oov, "Unknown-word policy")
      ->check(CLI::IsMember({"hash", "zero", "error"}))
      ->capture_default_str();
  app->add_option("--extractor-config", o.extractor_config,
                  "Keyword extractor settings (JSON)")
      ->check(CLI::ExistingFile);
  app->add_option("--lexicon", o.lexicon, "Extra part-of-speech lexicon (TSV)")
      ->check(CLI::ExistingFile);
}

struct Data {
  Corpus train;
  Corpus test;
  std::shared_ptr<const EmbeddingStore> store;
  ExtractorConfig extractor;
  PosTagger tagger;
};

OovPolicy ParseOov(const std::string& name) {
  if (name == "zero") return OovPolicy::kZero;
  if (name == "error") return OovPolicy::kError;
  return OovPolicy::kHashRandom;
}

void AddTokens(const Corpus& corpus, std::unordered_set<std::string>& out) {
  for (const auto& conv : corpus.conversations) {
    for (const auto& u : conv.utterances) {
      out.insert(u.tokens.begin(), u.tokens.end());
      out.insert(u.keywords.begin(), u.keywords.end());
    }
  }
}

// Loads both corpora, fills missing keywords with statistics from the
// training split, and reads the vectors of every corpus word.
Data LoadData(const DataOptions& o) {
  Data d;
  if (!o.extractor_config.empty()) {
    d.extractor = ExtractorConfig::FromJsonFile(o.extractor_config);
  }
  if (!o.lexicon.empty()) d.tagger.LoadLexicon(o.lexicon);
  d.train = LoadCorpus(o.train);
  const auto stats = TfIdfStats::Compute(d.train);
  AnnotateCorpus(d.train, stats, d.tagger, d.extractor);
  if (!o.test.empty()) {
    d.test = LoadCorpus(o.test);
    AnnotateCorpus(d.test, stats, d.tagger, d.extractor);
  }
  std::unordered_set<std::string> words;
  AddTokens(d.train, words);
  AddTokens(d.test, words);
  auto store = std::make_shared<EmbeddingStore>(
      LoadEmbeddings(o.embeddings, o.dim, &words, ParseOov(o.oov)));
  spdlog::info("{} word vectors, coverage {:.3f}", store->size(),
               store->coverage());
  d.store = std::move(store);
  return d;
}

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double lr_final = 1e-4;
  std::size_t anneal_epochs = 10;
  std::string optimizer;
};

void AddTrainOptions(CLI::App* app, TrainOptions& o,
                     const std::string& default_optimizer) {
  o.optimizer = default_optimizer;
  app->add_option("--epochs", o.epochs)->capture_default_str();
  app->add_option("--batch-size", o.batch_size)->capture_default_str();
  app->add_option("--lr", o.lr, "Initial learning rate")->capture_default_str();
  app->add_option("--lr-final", o.lr_final)->capture_default_str();
  app->add_option("--anneal-epochs", o.anneal_epochs)->capture_default_str();
  app->add_option("--optimizer", o.optimizer)
      ->check(CLI::IsMember({"momentum", "adam"}))
      ->capture_default_str();
}

TrainConfig ToTrainConfig(const TrainOptions& o) {
  TrainConfig c;
  c.epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.lr_initial = o.lr;
  c.lr_final = o.lr_final;
  c.anneal_epochs = o.anneal_epochs;
  c.optimizer = ParseOptimizerKind(o.optimizer);
  return c;
}

void WriteText(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

// Loads models and wires every agent. Targets come from the test split when
// there is one.
struct AgentSetup {
  Data data;
  std::shared_ptr<const AgentResources> resources;
  std::vector<std::string> targets;
  std::vector<std::string> openings;
};

AgentSetup LoadAgents(const DataOptions& data_opts, const std::string& models,
                      const std::string& similarity,
                      std::size_t target_min_count) {
  AgentSetup s;
  s.data = LoadData(data_opts);
  const TrainedModels m = LoadModels(models, s.data.train);
  s.resources = std::make_shared<const AgentResources>(AssembleResources(
      s.data.train, s.data.store, m, similarity, s.data.extractor,
      s.data.tagger));
  const Corpus& source = s.data.test.empty() ? s.data.train : s.data.test;
  s.targets = TargetPool(source, target_min_count);
  s.openings = OpeningPool(source);
  return s;
}

// ---------------------------------------------------------------------------
// Subcommands

int RunMakeSynthetic(const std::string& out_dir, const synth::SynthConfig& cfg) {
  auto data = synth::Generate(cfg);
  const auto stats = TfIdfStats::Compute(data.train);
  const PosTagger tagger;
  const ExtractorConfig extractor;
  AnnotateCorpus(data.train, stats, tagger, extractor);
  AnnotateCorpus(data.test, stats, tagger, extractor);
  fs::create_directories(out_dir);
  SaveCorpus(data.train, (fs::path(out_dir) / "train.jsonl").string());
  SaveCorpus(data.test, (fs::path(out_dir) / "test.jsonl").string());
  SaveEmbeddings(data.store, (fs::path(out_dir) / "embeddings.txt").string());
  std::cout << "wrote " << data.train.conversations.size() << " train and "
            << data.test.conversations.size() << " test conversations, "
            << data.store.size() << " vectors of width " << data.store.dim()
            << " to " << out_dir << "\n";
  return 0;
}

int RunExtractKeywords(const std::string& in, const std::string& out,
                       const std::string& config, const std::string& stats_path,
                       const std::string& lexicon) {
  const ExtractorConfig extractor =
      config.empty() ? ExtractorConfig{} : ExtractorConfig::FromJsonFile(config);
  PosTagger tagger;
  if (!lexicon.empty()) tagger.LoadLexicon(lexicon);
  Corpus corpus = LoadCorpus(in);
  const auto stats = TfIdfStats::Compute(
      stats_path.empty() ? corpus : LoadCorpus(stats_path));
  const std::size_t n = AnnotateCorpus(corpus, stats, tagger, extractor);
  SaveCorpus(corpus, out);
  std::cout << "annotated " << n << " of " << corpus.NumUtterances()
            << " utterances\n";
  return 0;
}

int RunTrainTransition(const DataOptions& d, const TrainOptions& t,
                       const std::string& model, const std::string& out,
                       std::size_t hidden, std::uint64_t seed) {
  const Data data = LoadData(d);
  const KeywordVocab vocab = KeywordVocab::Build(data.train);
  if (vocab.empty()) throw ValidationError("training corpus has no keywords");
  const auto ex = DeriveTransitionExamples(data.train, &vocab);
  spdlog::info("{} keywords, {} examples", vocab.size(), ex.examples.size());
  TrainConfig tc = ToTrainConfig(t);
  TrainTrace trace;
  json j;
  // Seeds mirror train-all so a single model matches its counterpart there.
  if (model == "pmi") {
    j = PmiTable::Fit(ex.examples, vocab).ToJson(vocab);
  } else if (model == "kernel") {
    tc.seed = SplitMix64(seed ^ 0x1);
    j = TrainKernel(ex.examples, vocab, *data.store, tc, KernelModel::Default(),
                    &trace)
            .ToJson();
  } else {
    Rng init = SubRng(seed, 2);
    tc.seed = SplitMix64(seed ^ 0x2);
    j = TrainNeural(ex.examples, vocab, *data.store, tc,
                    NeuralModel::Init(data.store->dim(), hidden, vocab.size(), init),
                    &trace)
            .ToJson(vocab);
  }
  WriteJsonFile(j, out);
  for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e) {
    std::cout << "epoch " << e + 1 << " loss " << trace.epoch_loss[e] << "\n";
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

struct RetrievalOptions {
  std::size_t hidden = 200;
  std::size_t negatives = kDefaultNegatives;
  std::size_t history_turns = 2;
};

void AddRetrievalOptions(CLI::App* app, RetrievalOptions& o) {
  app->add_option("--negatives", o.negatives)->capture_default_str();
  app->add_option("--history-turns", o.history_turns)->capture_default_str();
}

int RunTrainRetrieval(const DataOptions& d, const TrainOptions& t,
                      const RetrievalOptions& r, bool no_keyword,
                      const std::string& out, const std::string& pool_cache,
                      std::uint64_t seed) {
  const Data data = LoadData(d);
  const UtterancePool pool(data.train);
  Rng neg_rng = SubRng(seed, 3);
  const auto examples = BuildRetrievalExamples(data.train, pool, neg_rng,
                                               r.negatives, r.history_turns);
  spdlog::info("{} retrieval examples", examples.size());
  TrainConfig tc = ToTrainConfig(t);
  tc.seed = SplitMix64(seed ^ 0x4);
  const RetrievalTrainer trainer(examples, *data.store, tc.seed, r.history_turns);
  Rng init = SubRng(seed, no_keyword ? 5 : 4);
  RetrievalModel model =
      RetrievalModel::Init(data.store->dim(), r.hidden, !no_keyword, init);
  model.history_turns = r.history_turns;
  TrainTrace trace;
  model = trainer.Train(tc, std::move(model), &trace);
  WriteJsonFile(model.ToJson(), out);
  for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e) {
    std::cout << "epoch " << e + 1 << " loss " << trace.epoch_loss[e] << "\n";
  }
  if (!pool_cache.empty()) {
    ResponsePool::Build(UniqueUtterances(data.train), model, *data.store)
        .SaveCache(pool_cache);
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int RunTrainAll(const DataOptions& d, const PipelineConfig& pc,
                const std::string& out_dir) {
  const Data data = LoadData(d);
  const TrainedModels m = TrainAll(data.train, *data.store, pc);
  SaveModels(m, out_dir);
  json losses = {{"kernel", m.kernel_trace.epoch_loss},
                 {"neural", m.neural_trace.epoch_loss},
                 {"retrieval_keyword", m.keyword_trace.epoch_loss},
                 {"retrieval_base", m.base_trace.epoch_loss}};
  WriteJsonFile(losses, (fs::path(out_dir) / "losses.json").string());
  std::cout << "wrote models for " << m.vocab.size() << " keywords to "
            << out_dir << "\n";
  return 0;
}

std::vector<RetrievalExample> TestRetrievalExamples(const Data& data,
                                                    std::size_t history_turns,
                                                    std::uint64_t seed) {
  const UtterancePool pool(data.test);
  Rng rng = SubRng(seed, 3);
  return BuildRetrievalExamples(data.test, pool, rng, kDefaultNegatives,
                                history_turns);
}

void Emit(const std::string& table, const json& report, const std::string& out) {
  std::cout << table;
  if (!out.empty()) WriteText(report.dump(2) + "\n", out);
}

int RunEvalTurn(const DataOptions& d, const std::string& models,
                std::uint64_t seed, const std::string& out) {
  const Data data = LoadData(d);
  const TrainedModels m = LoadModels(models, data.train);
  const auto transitions = DeriveTransitionExamples(data.test).examples;
  std::vector<TurnReportRow> rows;
  json report = json::object();

  const auto base_examples =
      TestRetrievalExamples(data, m.base_model.history_turns, seed);
  TurnReportRow base{"Retrieval", std::nullopt,
                     EvalRetrieval(m.base_model, *data.store, base_examples)};
  const auto kw_examples =
      TestRetrievalExamples(data, m.keyword_model.history_turns, seed);
  const RetrievalMetrics kw_retrieval =
      EvalRetrieval(m.keyword_model, *data.store, kw_examples);
  report["Retrieval"] = {{"retrieval", RetrievalMetricsToJson(*base.retrieval)}};
  rows.push_back(std::move(base));

  const PmiPredictor pmi(m.pmi, m.vocab);
  const NeuralPredictor neural(m.neural, m.vocab, *data.store);
  const KernelPredictor kernel(m.kernel, m.vocab, *data.store);
  const RandomPredictor random(m.vocab);
  const std::vector<std::pair<std::string, const TransitionPredictor*>> systems =
      {{"Random", &random}, {"PMI", &pmi}, {"Neural", &neural}, {"Kernel", &kernel}};
  for (const auto& [name, predictor] : systems) {
    Rng rng = SubRng(seed, 10);
    TurnReportRow row{name,
                      EvalKeywordPrediction(*predictor, transitions, *data.store, rng),
                      std::nullopt};
    json entry = {{"keyword", KeywordMetricsToJson(*row.keyword)}};
    if (name != "Random") {
      // Response selection is shared: the keyword-conditioned model is fed
      // the gold keyword.
      row.retrieval = kw_retrieval;
      entry["retrieval"] = RetrievalMetricsToJson(kw_retrieval);
    }
    report[name] = std::move(entry);
    rows.push_back(std::move(row));
  }
  Emit(FormatTurnTable(rows), report, out);
  return 0;
}

int RunEvalRetrieval(const DataOptions& d, const std::string& model_path,
                     std::uint64_t seed, const std::string& out) {
  const Data data = LoadData(d);
  const RetrievalModel model = RetrievalModel::FromJson(ReadJsonFile(model_path));
  const auto examples = TestRetrievalExamples(data, model.history_turns, seed);
  const RetrievalMetrics m = EvalRetrieval(model, *data.store, examples);
  const std::string name =
      model.keyword_conditioned ? "Retrieval+keyword" : "Retrieval";
  Emit(FormatTurnTable({{name, std::nullopt, m}}), RetrievalMetricsToJson(m), out);
  return 0;
}

struct AgentOptions {
  std::string models;
  std::string similarity = "embedding";
  std::size_t max_turns = 8;
  std::string selection = "argmax";
  double threshold = kDefaultAchieveThreshold;
  std::size_t target_min_count = 5;
};

void AddAgentOptions(CLI::App* app, AgentOptions& o) {
  app->add_option("--models", o.models, "Directory written by train-all")
      ->required()
      ->check(CLI::ExistingDirectory);
  app->add_option("--similarity", o.similarity,
                  "Target match: exact, embedding or pairs:<file>")
      ->capture_default_str();
  app->add_option("--max-turns", o.max_turns)->capture_default_str();
  app->add_option("--selection", o.selection)
      ->check(CLI::IsMember({"argmax", "sample"}))
      ->capture_default_str();
  app->add_option("--achieve-threshold", o.threshold)->capture_default_str();
  app->add_option("--target-min-count", o.target_min_count,
                  "Minimum corpus count of a target keyword")
      ->capture_default_str();
}

AgentConfig ToAgentConfig(const AgentOptions& o, AgentKind kind) {
  AgentConfig c;
  c.kind = kind;
  c.max_turns = o.max_turns;
  c.selection = ParseSelectionMode(o.selection);
  c.achieve_threshold = o.threshold;
  return c;
}

int RunSimulate(const DataOptions& d, const AgentOptions& a,
                const std::vector<std::string>& agents, std::size_t runs,
                std::uint64_t seed, bool include_runs, const std::string& out) {
  const AgentSetup s = LoadAgents(d, a.models, a.similarity, a.target_min_count);
  std::vector<AgentKind> kinds;
  for (const auto& name : agents) {
    if (name == "all") {
      const auto all = AllAgentKinds();
      kinds.insert(kinds.end(), all.begin(), all.end());
    } else {
      kinds.push_back(ParseAgentKind(name));
    }
  }
  std::vector<SimulationReport> reports;
  json report = json::array();
  for (AgentKind kind : kinds) {
    SelfPlayConfig cfg;
    cfg.agent = ToAgentConfig(a, kind);
    cfg.n_runs = runs;
    cfg.seed = seed;
    reports.push_back(SelfPlay(*s.resources, cfg, s.targets, s.openings));
    report.push_back(SimulationReportToJson(reports.back(), include_runs));
  }
  Emit(FormatSimulationTable(reports), report, out);
  return 0;
}

int RunChat(const DataOptions& d, const AgentOptions& a, const std::string& agent,
            std::string target, const std::string& opening, std::uint64_t seed,
            bool debug) {
  const AgentSetup s = LoadAgents(d, a.models, a.similarity, a.target_min_count);
  AgentConfig cfg = ToAgentConfig(a, ParseAgentKind(agent));
  cfg.seed = seed;
  if (target.empty()) {
    if (s.targets.empty()) throw ValidationError("no target keywords available");
    Rng rng(seed);
    target = s.targets[UniformIndex(rng, s.targets.size())];
  }
  std::optional<std::string> first;
  if (!opening.empty()) first = opening;
  Session session = StartSession("chat", target, first, cfg, *s.resources);
  auto show = [&](const StepResult& step) {
    if (step.response) std::cout << "agent> " << step.response->Text() << "\n";
    if (debug) std::cerr << TurnTraceToJson(step.trace).dump() << "\n";
  };
  if (session.status == SessionStatus::kActive) {
    show(AgentStep(session, std::nullopt, *s.resources));
  }
  std::string line;
  while (session.status == SessionStatus::kActive) {
    std::cout << "you> " << std::flush;
    if (!std::getline(std::cin, line) || line == "/quit") break;
    if (Tokenize(line).empty()) continue;
    show(AgentStep(session, line, *s.resources));
  }
  std::cout << "session " << SessionStatusName(session.status) << " after "
            << session.turn_count << " agent turns; the target was \""
            << session.target << "\"\n";
  return 0;
}

int RunServe(const DataOptions& d, const AgentOptions& a, const std::string& host,
             int port, const std::string& data_dir,
             const std::string& static_dir, std::uint64_t seed) {
  const AgentSetup s = LoadAgents(d, a.models, a.similarity, a.target_min_count);
  ServiceConfig cfg;
  cfg.data_dir = data_dir;
  cfg.targets = s.targets;
  cfg.max_turns = a.max_turns;
  cfg.seed = seed;
  SessionService service(s.resources, cfg);
  const std::size_t loaded = service.LoadFromDisk();
  if (loaded > 0) spdlog::info("restored {} sessions", loaded);

  // SIGINT/SIGTERM are taken synchronously by this thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  HttpServer server(service);
  if (!static_dir.empty()) server.ServeStatic(static_dir);
  const int bound = server.Bind(host, port);
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  std::thread worker([&server] { server.Run(); });
  int sig = 0;
  sigwait(&signals, &sig);
  spdlog::info("shutting down");
  server.Stop();
  worker.join();
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"Target-guided open-domain chat: training, evaluation and serving"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level)
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();

  // make-synthetic
  auto* synth_cmd = app.add_subcommand("make-synthetic",
                                       "Write a generated corpus and vectors");
  std::string synth_out;
  synth::SynthConfig synth_cfg;
  synth_cmd->add_option("--out-dir", synth_out)->required();
  synth_cmd->add_option("--seed", synth_cfg.seed)->capture_default_str();
  synth_cmd->add_option("--topics", synth_cfg.topics)
      ->check(CLI::Range(std::size_t{3}, synth::kMaxTopics))
      ->capture_default_str();
  synth_cmd->add_option("--nouns-per-topic", synth_cfg.nouns_per_topic)
      ->check(CLI::Range(std::size_t{2}, synth::kMaxNounsPerTopic))
      ->capture_default_str();
  synth_cmd->add_option("--train-conversations", synth_cfg.train_conversations)
      ->capture_default_str();
  synth_cmd->add_option("--test-conversations", synth_cfg.test_conversations)
      ->capture_default_str();
  synth_cmd->add_option("--dim", synth_cfg.dim)->capture_default_str();

  // extract-keywords
  auto* extract_cmd = app.add_subcommand(
      "extract-keywords", "Fill in keywords for every unannotated utterance");
  std::string ex_in, ex_out, ex_config, ex_stats, ex_lexicon;
  extract_cmd->add_option("--in", ex_in)->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--out", ex_out)->required();
  extract_cmd->add_option("--config", ex_config)->check(CLI::ExistingFile);
  extract_cmd->add_option("--stats", ex_stats,
                          "Corpus for TF-IDF statistics (default: --in)")
      ->check(CLI::ExistingFile);
  extract_cmd->add_option("--lexicon", ex_lexicon)->check(CLI::ExistingFile);

  std::uint64_t seed = 1;
  auto add_seed = [&seed](CLI::App* cmd) {
    cmd->add_option("--seed", seed)->capture_default_str();
  };

  // train-transition
  auto* tt_cmd = app.add_subcommand("train-transition",
                                    "Fit one keyword transition model");
  DataOptions tt_data;
  TrainOptions tt_train;
  std::string tt_model, tt_out;
  std::size_t tt_hidden = 200;
  AddDataOptions(tt_cmd, tt_data, false);
  AddTrainOptions(tt_cmd, tt_train, "momentum");
  tt_cmd->add_option("--model", tt_model)
      ->required()
      ->check(CLI::IsMember({"pmi", "neural", "kernel"}));
  tt_cmd->add_option("--out", tt_out)->required();
  tt_cmd->add_option("--hidden", tt_hidden, "Neural hidden width")
      ->capture_default_str();
  add_seed(tt_cmd);

  // train-retrieval
  auto* tr_cmd = app.add_subcommand("train-retrieval",
                                    "Fit one response retrieval model");
  DataOptions tr_data;
  TrainOptions tr_train;
  RetrievalOptions tr_opts;
  bool tr_no_keyword = false;
  std::string tr_out, tr_cache;
  AddDataOptions(tr_cmd, tr_data, false);
  AddTrainOptions(tr_cmd, tr_train, "adam");
  AddRetrievalOptions(tr_cmd, tr_opts);
  tr_cmd->add_option("--hidden", tr_opts.hidden)->capture_default_str();
  tr_cmd->add_flag("--no-keyword", tr_no_keyword,
                   "Train the unconditioned baseline");
  tr_cmd->add_option("--out", tr_out)->required();
  tr_cmd->add_option("--pool-cache", tr_cache,
                     "Also write response features to <prefix>.bin/.json");
  add_seed(tr_cmd);

  // train-all
  auto* ta_cmd = app.add_subcommand("train-all",
                                    "Fit every model into one directory");
  DataOptions ta_data;
  TrainOptions ta_transition, ta_retrieval;
  RetrievalOptions ta_ropts;
  std::size_t ta_neural_hidden = 200;
  std::string ta_out;
  AddDataOptions(ta_cmd, ta_data, false);
  AddTrainOptions(ta_cmd, ta_transition, "momentum");
  AddRetrievalOptions(ta_cmd, ta_ropts);
  ta_retrieval.optimizer = "adam";
  ta_cmd->add_option("--retrieval-epochs", ta_retrieval.epochs)->capture_default_str();
  ta_cmd->add_option("--retrieval-lr", ta_retrieval.lr)->capture_default_str();
  ta_cmd->add_option("--retrieval-lr-final", ta_retrieval.lr_final)
      ->capture_default_str();
  ta_cmd->add_option("--neural-hidden", ta_neural_hidden)->capture_default_str();
  ta_cmd->add_option("--retrieval-hidden", ta_ropts.hidden)->capture_default_str();
  ta_cmd->add_option("--out-dir", ta_out)->required();
  add_seed(ta_cmd);

  // eval-turn
  auto* et_cmd = app.add_subcommand("eval-turn",
                                    "Turn-level metrics on the test split");
  DataOptions et_data;
  std::string et_models, et_out;
  AddDataOptions(et_cmd, et_data, true);
  et_cmd->add_option("--models", et_models)->required()->check(CLI::ExistingDirectory);
  et_cmd->add_option("--out", et_out, "Also write the JSON report here");
  add_seed(et_cmd);

  // eval-retrieval
  auto* er_cmd = app.add_subcommand("eval-retrieval",
                                    "Response selection metrics of one model");
  DataOptions er_data;
  std::string er_model, er_out;
  AddDataOptions(er_cmd, er_data, true);
  er_cmd->add_option("--model", er_model)->required()->check(CLI::ExistingFile);
  er_cmd->add_option("--out", er_out, "Also write the JSON report here");
  add_seed(er_cmd);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Self-play against the base agent");
  DataOptions sim_data;
  AgentOptions sim_agent;
  std::vector<std::string> sim_agents;
  std::size_t sim_runs = 200;
  bool sim_include_runs = false;
  std::string sim_out;
  AddDataOptions(sim_cmd, sim_data, false);
  AddAgentOptions(sim_cmd, sim_agent);
  sim_cmd->add_option("--agent", sim_agents, "Agent kind(s), or all")->required();
  sim_cmd->add_option("--runs", sim_runs)->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_flag("--include-runs", sim_include_runs,
                    "Keep per-run records in the JSON report");
  sim_cmd->add_option("--out", sim_out, "Also write the JSON report here");
  add_seed(sim_cmd);

  // chat
  auto* chat_cmd = app.add_subcommand("chat", "Talk to an agent in the terminal");
  DataOptions chat_data;
  AgentOptions chat_agent;
  std::string chat_kind = "kernel", chat_target, chat_opening;
  bool chat_debug = false;
  AddDataOptions(chat_cmd, chat_data, false);
  AddAgentOptions(chat_cmd, chat_agent);
  chat_cmd->add_option("--agent", chat_kind)->capture_default_str();
  chat_cmd->add_option("--target", chat_target, "Default: drawn from the corpus");
  chat_cmd->add_option("--opening", chat_opening, "Your first utterance");
  chat_cmd->add_flag("--debug", chat_debug, "Print each turn trace to stderr");
  add_seed(chat_cmd);

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP JSON service");
  DataOptions serve_data;
  AgentOptions serve_agent;
  std::string serve_host = "127.0.0.1", serve_dir = "sessions-data";
  std::string serve_static;
  int serve_port = 8080;
  AddDataOptions(serve_cmd, serve_data, false);
  AddAgentOptions(serve_cmd, serve_agent);
  serve_cmd->add_option("--host", serve_host)->capture_default_str();
  serve_cmd->add_option("--port", serve_port)
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  serve_cmd->add_option("--data-dir", serve_dir,
                        std::string("Session store; ") + kDataDirEnv + " overrides")
      ->capture_default_str();
  serve_cmd->add_option("--static-dir", serve_static,
                        "Directory of chat UI assets to serve at /");
  add_seed(serve_cmd);

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("tgc");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*synth_cmd) return RunMakeSynthetic(synth_out, synth_cfg);
    if (*extract_cmd) {
      return RunExtractKeywords(ex_in, ex_out, ex_config, ex_stats, ex_lexicon);
    }
    if (*tt_cmd) {
      return RunTrainTransition(tt_data, tt_train, tt_model, tt_out, tt_hidden, seed);
    }
    if (*tr_cmd) {
      return RunTrainRetrieval(tr_data, tr_train, tr_opts, tr_no_keyword, tr_out,
                               tr_cache, seed);
    }
    if (*ta_cmd) {
      PipelineConfig pc;
      pc.transition = ToTrainConfig(ta_transition);
      ta_retrieval.batch_size = ta_transition.batch_size;
      ta_retrieval.anneal_epochs = ta_transition.anneal_epochs;
      pc.retrieval = ToTrainConfig(ta_retrieval);
      pc.neural_hidden = ta_neural_hidden;
      pc.retrieval_hidden = ta_ropts.hidden;
      pc.negatives = ta_ropts.negatives;
      pc.history_turns = ta_ropts.history_turns;
      pc.seed = seed;
      return RunTrainAll(ta_data, pc, ta_out);
    }
    if (*et_cmd) return RunEvalTurn(et_data, et_models, seed, et_out);
    if (*er_cmd) return RunEvalRetrieval(er_data, er_model, seed, er_out);
    if (*sim_cmd) {
      return RunSimulate(sim_data, sim_agent, sim_agents, sim_runs, seed,
                         sim_include_runs, sim_out);
    }
    if (*chat_cmd) {
      return RunChat(chat_data, chat_agent, chat_kind, chat_target, chat_opening,
                     seed, chat_debug);
    }
    if (*serve_cmd) {
      return RunServe(serve_data, serve_agent, serve_host, serve_port, serve_dir,
                      serve_static, seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace tgc

int main(int argc, char** argv) { return tgc::Main(argc, argv); }
