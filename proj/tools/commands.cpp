#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "xmh/error.hpp"
#include "xmh/eval.hpp"
#include "xmh/io.hpp"
#include "xmh/retrieval.hpp"
#include "xmh/synth.hpp"
#include "xmh/trainer.hpp"

namespace fs = std::filesystem;

namespace xmh::cli {

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat key=value file; a key names a long flag of `cmd`. Flags given on the
// command line take precedence.
void apply_config_file(CLI::App& cmd, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    CLI::Option* opt = nullptr;
    try {
      opt = cmd.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (key == "config") throw UsageError("config files cannot include other config files");
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::vector<LabelSet> pick_labels(const std::vector<LabelSet>& labels,
                                  std::span<const std::size_t> idx) {
  std::vector<LabelSet> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels[i]);
  return out;
}

void write_pr(const fs::path& path, std::span<const PrPoint> curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_pr_curve_csv(out, curve);
  if (!out) throw IoError("write to " + path.string() + " failed");
}

void report_map(std::ostream& out, const std::string& direction, const MapResult& m) {
  out << direction << " MAP: " << std::fixed << std::setprecision(6) << m.map
      << std::defaultfloat << " (queries=" << m.evaluated << ", excluded=" << m.excluded << ")\n";
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  SynthConfig cfg;
  std::size_t dim = 0;
  std::string out;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic paired Gaussian dataset bundle");
  cmd->add_option("--classes", a.cfg.classes, "Number of classes")->check(CLI::Range(2, 1 << 20));
  cmd->add_option("--per-class", a.cfg.per_class, "Pairs per class")->check(CLI::PositiveNumber);
  cmd->add_option("--dim", a.dim, "Feature dimension of both modalities")->check(CLI::PositiveNumber);
  cmd->add_option("--image-dim", a.cfg.image_dim, "Image feature dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--text-dim", a.cfg.text_dim, "Text feature dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--separation", a.cfg.separation, "Std-dev of class mean coordinates");
  cmd->add_option("--noise", a.cfg.noise, "Std-dev of per-item noise")->check(CLI::PositiveNumber);
  cmd->add_option("--multi-label", a.cfg.multi_label_prob, "Probability of a second label")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--query-per-class", a.cfg.query_per_class, "Held-out queries per class");
  cmd->add_option("--seed", a.cfg.seed, "Random seed");
  cmd->add_option("--out", a.out, "Output bundle directory")->required();
}

int run_synth(SynthArgs& a, std::ostream& out) {
  if (a.dim > 0) {
    a.cfg.image_dim = a.dim;
    a.cfg.text_dim = a.dim;
  }
  try {
    a.cfg.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const io::DatasetBundle bundle = synth_generate(a.cfg);
  io::write_bundle(bundle, a.out);
  out << "wrote " << bundle.data.size() << " pairs (" << bundle.query.size() << " queries, "
      << bundle.gallery.size() << " gallery) to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  TrainConfig cfg;
  std::string data;
  std::string out;
  std::string config;
  std::string batching = "stochastic";
  CLI::App* cmd = nullptr;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* cmd = app.add_subcommand("train", "Learn binary codes and encoders on a bundle");
  a.cmd = cmd;
  cmd->add_option("--data", a.data, "Dataset bundle directory")->required();
  cmd->add_option("--out", a.out, "Output directory (default: <data>/model)");
  cmd->add_option("--config", a.config, "key=value run configuration file");
  cmd->add_option("--bits", a.cfg.code_len, "Code length M")->check(CLI::PositiveNumber);
  cmd->add_option("--eta", a.cfg.eta, "Quantization penalty weight")->check(CLI::NonNegativeNumber);
  cmd->add_option("--epochs", a.cfg.epochs, "Maximum number of epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", a.cfg.max_iterations, "Maximum number of batch steps")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--batch-size", a.cfg.batch_size, "Mini-batch size")->check(CLI::Range(2, 1 << 30));
  cmd->add_option("--hidden", a.cfg.hidden_units, "Hidden layer width")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", a.cfg.adam.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--beta1", a.cfg.adam.beta1, "Adam beta1");
  cmd->add_option("--beta2", a.cfg.adam.beta2, "Adam beta2");
  cmd->add_option("--adam-eps", a.cfg.adam.epsilon, "Adam epsilon")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", a.cfg.convergence_tol, "Relative loss change treated as converged");
  cmd->add_option("--patience", a.cfg.convergence_patience, "Calm epochs before stopping");
  cmd->add_option("--batching", a.batching, "Batch formation")
      ->check(CLI::IsMember({"stochastic", "fixed"}));
  cmd->add_option("--seed", a.cfg.seed, "Random seed");
}

int run_train(TrainArgs& a, std::ostream& out) {
  if (!a.config.empty()) apply_config_file(*a.cmd, a.config);
  a.cfg.batching = a.batching == "fixed" ? BatchingMode::fixed : BatchingMode::stochastic;
  try {
    a.cfg.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const fs::path out_dir = a.out.empty() ? fs::path(a.data) / "model" : fs::path(a.out);

  const io::DatasetBundle bundle = io::read_bundle(a.data);
  const PairedDataset train_set =
      bundle.train.empty() ? bundle.data : bundle.data.subset(bundle.train);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::ofstream log(out_dir / "loss.log");
  if (!log) throw IoError("cannot open " + (out_dir / "loss.log").string());
  io::write_loss_header(log);

  const TrainResult result = train(train_set, a.cfg, [&](const EpochRecord& rec, const TrainState&) {
    io::write_loss_record(log, rec);
    log.flush();
  });
  if (!log) throw IoError("write to loss.log failed");

  io::write_model(result.image_model, out_dir / "image.model");
  io::write_model(result.text_model, out_dir / "text.model");
  io::write_codes(result.image_codes, out_dir / "image_codes.xmbc");
  io::write_codes(result.text_codes, out_dir / "text_codes.xmbc");
  out << "trained " << result.iterations << " steps over " << result.history.size() << " epochs"
      << (result.converged ? " (converged)" : "") << "; artifacts in " << out_dir.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct EncodeArgs {
  std::string model;
  std::string features;
  std::string out;
};

void add_encode(CLI::App& app, EncodeArgs& a) {
  auto* cmd = app.add_subcommand("encode", "Map a feature file through a model to binary codes");
  cmd->add_option("--model", a.model, "Encoder model file")->required();
  cmd->add_option("--features", a.features, "Feature file (XMBF)")->required();
  cmd->add_option("--out", a.out, "Output code file (XMBC)")->required();
}

int run_encode(const EncodeArgs& a, std::ostream& out) {
  const EncoderModel model = io::read_model(a.model);
  const FeatureMatrix feats = io::read_features(a.features);
  const CodeMatrix codes = encode_batch(model, feats);
  io::write_codes(codes, a.out);
  out << "encoded " << codes.count() << " items to " << codes.code_len() << "-bit codes\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct RetrieveArgs {
  std::string index;
  std::string queries;
  std::string out;
  std::size_t top = 0;
};

void add_retrieve(CLI::App& app, RetrieveArgs& a) {
  auto* cmd = app.add_subcommand("retrieve", "Rank a gallery code file for every query code");
  cmd->add_option("--index", a.index, "Gallery code file (XMBC)")->required();
  cmd->add_option("--queries", a.queries, "Query code file (XMBC)")->required();
  cmd->add_option("--out", a.out, "Ranking output, one line of gallery ids per query")->required();
  cmd->add_option("--top", a.top, "Keep only the first k ids per query (0 = all)");
}

int run_retrieve(const RetrieveArgs& a, std::ostream& out) {
  CodeMatrix gallery = io::read_codes(a.index);
  const CodeMatrix queries = io::read_codes(a.queries);
  if (gallery.code_len() != queries.code_len()) {
    throw InvalidInput("query codes are " + std::to_string(queries.code_len()) +
                       "-bit but the index holds " + std::to_string(gallery.code_len()) +
                       "-bit codes");
  }
  const std::size_t n = gallery.count();
  const RetrievalIndex index(std::move(gallery), std::vector<LabelSet>(n));
  auto rankings = rank_all(index, queries);
  if (a.top > 0) {
    for (auto& r : rankings) r.resize(std::min(r.size(), a.top));
  }
  std::ofstream file(a.out);
  if (!file) throw IoError("cannot open " + a.out + " for writing");
  io::write_rankings(rankings, file);
  if (!file) throw IoError("write to " + a.out + " failed");
  out << "ranked " << queries.count() << " queries against " << n << " gallery codes\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string data;
  std::string models;
  std::string rankings;
  std::string query_labels;
  std::string gallery_labels;
  std::string pr_out;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* cmd = app.add_subcommand(
      "eval", "Score retrieval by MAP; either a ranking file or a trained bundle");
  auto* data = cmd->add_option("--data", a.data, "Bundle directory: evaluate both directions");
  cmd->add_option("--models", a.models, "Model directory (default: <data>/model)")->needs(data);
  auto* rk = cmd->add_option("--rankings", a.rankings, "Ranking file from `retrieve`");
  auto* ql = cmd->add_option("--query-labels", a.query_labels, "Label file for the queries");
  auto* gl = cmd->add_option("--gallery-labels", a.gallery_labels, "Label file for the gallery");
  rk->needs(ql, gl)->excludes(data);
  ql->needs(rk);
  gl->needs(rk);
  cmd->add_option("--pr-out", a.pr_out,
                  "PR-curve CSV (ranking mode) or file prefix (bundle mode)");
}

MapResult eval_rankings(const EvalArgs& a, std::ostream& out) {
  std::ifstream in(a.rankings);
  if (!in) throw IoError("cannot open " + a.rankings);
  const auto rankings = io::read_rankings(in);
  const auto qlabels = io::read_labels(fs::path(a.query_labels));
  const auto glabels = io::read_labels(fs::path(a.gallery_labels));
  if (rankings.size() != qlabels.size()) {
    throw InvalidInput(std::to_string(rankings.size()) + " rankings but " +
                       std::to_string(qlabels.size()) + " query label sets");
  }
  std::vector<QueryOutcome> outcomes;
  outcomes.reserve(rankings.size());
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    std::vector<std::size_t> pos(rankings[q].begin(), rankings[q].end());
    outcomes.push_back({std::move(pos), make_relevance(qlabels[q], glabels)});
  }
  const MapResult m = mean_average_precision(outcomes);
  report_map(out, "ranking", m);
  if (!a.pr_out.empty()) write_pr(a.pr_out, mean_precision_recall_curve(outcomes));
  return m;
}

void eval_bundle(const EvalArgs& a, std::ostream& out) {
  const io::DatasetBundle bundle = io::read_bundle(a.data);
  const fs::path models = a.models.empty() ? fs::path(a.data) / "model" : fs::path(a.models);
  const EncoderModel image_model = io::read_model(models / "image.model");
  const EncoderModel text_model = io::read_model(models / "text.model");

  const std::size_t n = bundle.data.size();
  const auto query = bundle.query.empty() ? all_indices(n) : bundle.query;
  const auto gallery = bundle.gallery.empty() ? all_indices(n) : bundle.gallery;
  const auto qlabels = pick_labels(bundle.data.labels, query);
  const auto glabels = pick_labels(bundle.data.labels, gallery);

  const CodeMatrix q_img = encode_batch(image_model, bundle.data.image.select_columns(query));
  const CodeMatrix q_txt = encode_batch(text_model, bundle.data.text.select_columns(query));
  const RetrievalIndex g_txt(encode_batch(text_model, bundle.data.text.select_columns(gallery)), glabels);
  const RetrievalIndex g_img(encode_batch(image_model, bundle.data.image.select_columns(gallery)), glabels);

  const RetrievalReport i2t = evaluate_retrieval(g_txt, q_img, qlabels);
  const RetrievalReport t2i = evaluate_retrieval(g_img, q_txt, qlabels);
  report_map(out, "image->text", i2t.map);
  report_map(out, "text->image", t2i.map);
  if (!a.pr_out.empty()) {
    write_pr(a.pr_out + "_i2t.csv", i2t.pr_curve);
    write_pr(a.pr_out + "_t2i.csv", t2i.pr_curve);
  }
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  if (!a.rankings.empty()) {
    eval_rankings(a, out);
  } else if (!a.data.empty()) {
    eval_bundle(a, out);
  } else {
    throw UsageError("eval needs either --data or --rankings with --query-labels/--gallery-labels");
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-modal binary code learning and Hamming retrieval"};
  app.name("xmh");
  app.require_subcommand(1);

  SynthArgs synth;
  TrainArgs train_args;
  EncodeArgs encode;
  RetrieveArgs retrieve;
  EvalArgs eval;
  add_synth(app, synth);
  add_train(app, train_args);
  add_encode(app, encode);
  add_retrieve(app, retrieve);
  add_eval(app, eval);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (app.got_subcommand("synth")) return run_synth(synth, out);
    if (app.got_subcommand("train")) return run_train(train_args, out);
    if (app.got_subcommand("encode")) return run_encode(encode, out);
    if (app.got_subcommand("retrieve")) return run_retrieve(retrieve, out);
    if (app.got_subcommand("eval")) return run_eval(eval, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << "\n";
    return kBadData;
  } catch (const UndefinedQuery& e) {
    err << "undefined metric: " << e.what() << "\n";
    return kBadData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace xmh::cli
