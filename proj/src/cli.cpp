#include "gift/cli.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "gift/checkpoint.hpp"
#include "gift/dataset.hpp"
#include "gift/errors.hpp"
#include "gift/gradcheck.hpp"
#include "gift/trainer.hpp"
#include "json.hpp"

namespace gift {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("bad value '" + std::string(text) + "' for '" + std::string(key) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("bad boolean '" + std::string(text) + "' for '" + std::string(key) + "'");
}

std::string real_text(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

struct Key {
  std::function<void(CliConfig&, std::string_view)> set;
  std::function<std::string(const CliConfig&)> get;
};

template <typename T>
Key int_key(T CliConfig::*group, int T::*field) {
  return {[=](CliConfig& c, std::string_view v) { (c.*group).*field = parse_number<int>("", v); },
          [=](const CliConfig& c) { return std::to_string((c.*group).*field); }};
}

template <typename T>
Key real_key(T CliConfig::*group, double T::*field) {
  return {[=](CliConfig& c, std::string_view v) { (c.*group).*field = parse_number<double>("", v); },
          [=](const CliConfig& c) { return real_text((c.*group).*field); }};
}

Key lambda_key(std::size_t j) {
  return {[=](CliConfig& c, std::string_view v) { c.train.lambda_feature[j] = parse_number<double>("", v); },
          [=](const CliConfig& c) { return real_text(c.train.lambda_feature[j]); }};
}

Key noise_key(double NoiseScale::*field) {
  return {[=](CliConfig& c, std::string_view v) { c.synth.noise.*field = parse_number<double>("", v); },
          [=](const CliConfig& c) { return real_text(c.synth.noise.*field); }};
}

const std::map<std::string, Key>& key_table() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> t;
    // shared
    t["seed"] = {[](CliConfig& c, std::string_view v) {
                   c.synth.seed = c.train.seed = parse_number<std::uint64_t>("seed", v);
                 },
                 [](const CliConfig& c) { return std::to_string(c.train.seed); }};
    t["precision"] = {[](CliConfig& c, std::string_view v) {
                        if (v != "float" && v != "double") throw ConfigError("precision must be float or double");
                        c.precision = std::string(v);
                      },
                      [](const CliConfig& c) { return c.precision; }};
    // synthesizer
    t["n_clips"] = int_key(&CliConfig::synth, &SynthConfig::n_clips);
    t["frames"] = int_key(&CliConfig::synth, &SynthConfig::frames);
    t["fps"] = real_key(&CliConfig::synth, &SynthConfig::fps);
    t["occurrence_min"] = int_key(&CliConfig::synth, &SynthConfig::occurrence_min);
    t["occurrence_max"] = int_key(&CliConfig::synth, &SynthConfig::occurrence_max);
    t["court_width"] = real_key(&CliConfig::synth, &SynthConfig::court_width);
    t["court_height"] = real_key(&CliConfig::synth, &SynthConfig::court_height);
    t["noise_position"] = noise_key(&NoiseScale::position);
    t["noise_pose"] = noise_key(&NoiseScale::pose);
    t["noise_gaze"] = noise_key(&NoiseScale::gaze);
    t["noise_headpose"] = noise_key(&NoiseScale::headpose);
    t["difficulty"] = {[](CliConfig& c, std::string_view v) { c.synth.difficulty = parse_difficulty(v); },
                       [](const CliConfig& c) { return std::string(to_string(c.synth.difficulty)); }};
    // model and training
    t["embed_dim"] = int_key(&CliConfig::train, &TrainConfig::embed_dim);
    t["encoder_blocks"] = int_key(&CliConfig::train, &TrainConfig::encoder_blocks);
    t["decoder_blocks"] = int_key(&CliConfig::train, &TrainConfig::decoder_blocks);
    t["tau"] = int_key(&CliConfig::train, &TrainConfig::seen_frames);
    t["dct_keep"] = int_key(&CliConfig::train, &TrainConfig::dct_keep);
    t["dropout"] = real_key(&CliConfig::train, &TrainConfig::dropout);
    t["residual"] = {[](CliConfig& c, std::string_view v) { c.train.residual = parse_residual_mode(v); },
                     [](const CliConfig& c) { return std::string(to_string(c.train.residual)); }};
    t["graph"] = {[](CliConfig& c, std::string_view v) {
                    if (v != "full" && v != "team") throw ConfigError("graph must be full or team");
                    c.train.graph = std::string(v);
                  },
                  [](const CliConfig& c) { return c.train.graph; }};
    t["lambda_recon"] = real_key(&CliConfig::train, &TrainConfig::lambda_recon);
    t["lambda_fore"] = real_key(&CliConfig::train, &TrainConfig::lambda_fore);
    t["lambda_const"] = real_key(&CliConfig::train, &TrainConfig::lambda_const);
    t["use_const_loss"] = {[](CliConfig& c, std::string_view v) { c.train.use_const_loss = parse_bool("use_const_loss", v); },
                           [](const CliConfig& c) { return std::string(c.train.use_const_loss ? "true" : "false"); }};
    const char* names[] = {"bbox", "pose", "headpose", "gaze", "velocity", "role"};
    for (std::size_t j = 0; j < 6; ++j) t[std::string("lambda_") + names[j]] = lambda_key(j);
    t["lr"] = real_key(&CliConfig::train, &TrainConfig::learning_rate);
    t["weight_decay"] = real_key(&CliConfig::train, &TrainConfig::weight_decay);
    t["adam_beta1"] = real_key(&CliConfig::train, &TrainConfig::adam_beta1);
    t["adam_beta2"] = real_key(&CliConfig::train, &TrainConfig::adam_beta2);
    t["adam_epsilon"] = real_key(&CliConfig::train, &TrainConfig::adam_epsilon);
    t["epochs"] = int_key(&CliConfig::train, &TrainConfig::epochs);
    t["batch_size"] = int_key(&CliConfig::train, &TrainConfig::batch_size);
    t["threshold"] = real_key(&CliConfig::train, &TrainConfig::threshold);
    // evaluation
    t["delta"] = int_key(&CliConfig::match, &MatchConfig::delta);
    return t;
  }();
  return table;
}

/// Flags that map onto config keys; the value is applied after the config file.
struct Overrides {
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app->add_option(flag, values[key], help));
  }
  void apply(CliConfig& cfg) const {
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) apply_setting(cfg, key, values.at(key));
    }
  }
};

struct Common {
  std::string config_path;
  Overrides overrides;
};

CliConfig resolve(const Common& common) {
  CliConfig cfg;
  if (!common.config_path.empty()) {
    std::string text;
    try {
      text = read_text(common.config_path);
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
    cfg = parse_config_text(text);
  }
  common.overrides.apply(cfg);
  return cfg;
}

std::vector<ClipAnnotation> load_dir(const fs::path& dir, const std::string& split) {
  if (fs::exists(dir / kManifestName)) return load_split(dir, split);
  if (split != "all") throw IoError("'" + dir.string() + "' has no manifest; only --split all is possible");
  std::vector<ClipAnnotation> clips;
  for (const auto& f : clip_files(dir)) clips.push_back(load_clip_file(f));
  return clips;
}

template <typename Fn>
auto with_checkpoint(const fs::path& path, Fn&& fn) {
  if (checkpoint_scalar_bytes(path) == 4) return fn(load_checkpoint<float>(path));
  return fn(load_checkpoint<double>(path));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

std::string prediction_json(const std::string& clip_id, const OccurrencePrediction& p, int seen, double threshold) {
  return json{{"clip_id", clip_id},
              {"point_estimate", p.point_estimate},
              {"crossed_threshold", p.crossed_threshold},
              {"peak_score", p.peak_score},
              {"tau", seen},
              {"threshold", threshold}}
             .dump(2) +
         "\n";
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : key_table()) keys.push_back(k);
  return keys;
}

void apply_setting(CliConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = key_table();
  const auto it = table.find(std::string(key));
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  try {
    it->second.set(cfg, trim(value));
  } catch (const ConfigError& e) {
    throw ConfigError("config key '" + std::string(key) + "': " + e.what());
  }
}

CliConfig parse_config_text(std::string_view text, CliConfig cfg) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_setting(cfg, trim(std::string_view(content).substr(0, eq)), std::string_view(content).substr(eq + 1));
  }
  return cfg;
}

std::string config_text(const CliConfig& cfg) {
  std::string out;
  for (const auto& [k, key] : key_table()) out += k + " = " + key.get(cfg) + "\n";
  return out;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Group intention forecasting: synthesize, train, evaluate.", "gift"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", "gift 1.0");

  auto common_flags = [](CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "flat key = value config file")->check(CLI::ExistingFile);
    c.overrides.add(sub, "--seed", "seed", "random seed");
  };
  auto model_flags = [](CLI::App* sub, Common& c) {
    c.overrides.add(sub, "--tau", "tau", "number of seen frames (default 10)");
    c.overrides.add(sub, "--threshold", "threshold", "occurrence threshold on the role channel");
  };

  // synth
  Common synth_c;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  common_flags(synth, synth_c);
  synth_c.overrides.add(synth, "--n-clips", "n_clips", "number of clips");
  synth_c.overrides.add(synth, "--frames", "frames", "frames per clip");
  synth_c.overrides.add(synth, "--difficulty", "difficulty", "easy or hard");
  synth->add_option("--out", synth_out, "output directory")->required();

  // validate
  std::string validate_data;
  std::string validate_out;
  CLI::App* validate = app.add_subcommand("validate", "check every clip file of a directory");
  validate->add_option("--data", validate_data, "dataset directory or single clip file")->required();
  validate->add_option("--out", validate_out, "write the JSON report here instead of stdout");

  // stats
  std::string stats_data;
  std::string stats_split = "all";
  std::string stats_out;
  CLI::App* stats = app.add_subcommand("stats", "annotation counts and label histograms");
  stats->add_option("--data", stats_data, "dataset directory")->required();
  stats->add_option("--split", stats_split, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  stats->add_option("--out", stats_out, "write the JSON here instead of stdout");

  // train
  Common train_c;
  std::string train_data;
  std::string train_out;
  std::string train_ckpt;
  bool train_quiet = false;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model; writes checkpoint and loss history");
  common_flags(train_cmd, train_c);
  model_flags(train_cmd, train_c);
  train_c.overrides.add(train_cmd, "--epochs", "epochs", "training epochs");
  train_c.overrides.add(train_cmd, "--lr", "lr", "learning rate");
  train_c.overrides.add(train_cmd, "--weight-decay", "weight_decay", "decoupled weight decay");
  train_c.overrides.add(train_cmd, "--embed-dim", "embed_dim", "latent width");
  train_c.overrides.add(train_cmd, "--precision", "precision", "float or double");
  train_cmd->add_option("--data", train_data, "dataset directory with a manifest")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  train_cmd->add_option("--checkpoint", train_ckpt, "checkpoint path (default <out>/model.ckpt)");
  train_cmd->add_flag("--quiet", train_quiet, "no per-epoch progress on stderr");

  // forecast
  Common forecast_c;
  std::string forecast_ckpt;
  std::string forecast_clip;
  CLI::App* forecast = app.add_subcommand("forecast", "predict the occurrence frame of one clip");
  forecast->add_option("--checkpoint", forecast_ckpt, "trained model")->required();
  forecast->add_option("--clip", forecast_clip, "clip JSON file")->required();
  model_flags(forecast, forecast_c);

  // eval
  Common eval_c;
  std::string eval_ckpt;
  std::string eval_data;
  std::string eval_split = "test";
  std::string eval_out;
  bool eval_baseline = false;
  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on a dataset split");
  common_flags(eval, eval_c);
  model_flags(eval, eval_c);
  eval_c.overrides.add(eval, "--delta", "delta", "match tolerance in frames");
  eval->add_option("--checkpoint", eval_ckpt, "trained model");
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--split", eval_split, "train, val, test or all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  eval->add_option("--out", eval_out, "write eval_report.json, eval_report.csv and predictions.csv here");
  eval->add_flag("--baseline", eval_baseline, "score the mean-frame baseline fitted on the train split");

  // gradcheck
  Common grad_c;
  bool grad_quick = false;
  double grad_tolerance = 1e-4;
  CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference check of every layer and the full loss");
  common_flags(grad, grad_c);
  grad->add_flag("--quick", grad_quick, "layers only, skip the full model");
  grad->add_option("--tolerance", grad_tolerance, "maximum accepted relative error");

  // plot-data
  std::string plot_history;
  std::string plot_ckpt;
  std::string plot_data;
  std::string plot_split = "test";
  std::string plot_out;
  Common plot_c;
  CLI::App* plot = app.add_subcommand("plot-data", "CSV files for loss curves and per-clip timing errors");
  plot->add_option("--history", plot_history, "history.json written by train");
  plot->add_option("--checkpoint", plot_ckpt, "trained model, for per-clip errors");
  plot->add_option("--data", plot_data, "dataset directory, for per-clip errors");
  plot->add_option("--split", plot_split, "split for per-clip errors")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  plot->add_option("--out", plot_out, "output directory")->required();
  model_flags(plot, plot_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      const CliConfig cfg = resolve(synth_c);
      cfg.synth.validate();
      const SynthManifest m = generate_dataset(cfg.synth, synth_out);
      const SplitSizes s = split_sizes(cfg.synth.n_clips);
      out << "wrote " << m.clips.size() << " clips (train " << s.train << ", val " << s.val << ", test " << s.test
          << ") to " << synth_out << "\n";
      return 0;
    }

    if (validate->parsed()) {
      std::vector<fs::path> files;
      if (fs::is_directory(validate_data)) {
        files = clip_files(validate_data);
      } else {
        files.push_back(validate_data);
      }
      json clips = json::array();
      std::size_t bad = 0;
      for (const auto& f : files) {
        json entry = {{"file", f.filename().string()}};
        ParseOptions opts;
        opts.validate = false;
        try {
          const ClipAnnotation clip = parse_clip(read_text(f), opts);
          const ValidationReport report = validate_clip(clip);
          entry["report"] = json::parse(report_to_json(report));
          entry["ok"] = report.ok();
          if (!report.ok()) ++bad;
        } catch (const SyntaxError& e) {
          entry["ok"] = false;
          entry["error"] = std::string("syntax: ") + e.what();
          ++bad;
        } catch (const SchemaError& e) {
          entry["ok"] = false;
          entry["error"] = std::string("schema: ") + e.what();
          ++bad;
        }
        clips.push_back(std::move(entry));
      }
      const std::string text =
          json{{"clips", std::move(clips)}, {"valid", files.size() - bad}, {"invalid", bad}}.dump(2) + "\n";
      if (validate_out.empty()) {
        out << text;
      } else {
        write_text(validate_out, text);
      }
      if (bad > 0) err << bad << " of " << files.size() << " clips are invalid\n";
      return bad > 0 ? 1 : 0;
    }

    if (stats->parsed()) {
      const auto clips = load_dir(stats_data, stats_split);
      const std::string text = stats_to_json(dataset_stats(clips));
      if (stats_out.empty()) {
        out << text;
      } else {
        write_text(stats_out, text);
      }
      return 0;
    }

    if (train_cmd->parsed()) {
      const CliConfig cfg = resolve(train_c);
      cfg.train.validate();
      const auto train_set = load_split(train_data, "train");
      const auto val_set = load_split(train_data, "val");
      ensure_dir(train_out);
      const fs::path ckpt = train_ckpt.empty() ? fs::path(train_out) / "model.ckpt" : fs::path(train_ckpt);
      TrainHooks hooks;
      if (!train_quiet) {
        hooks.on_epoch = [&](const EpochRecord& r) {
          char line[160];
          std::snprintf(line, sizeof line, "epoch %d/%d train %.6g val %.6g\n", r.epoch, cfg.train.epochs,
                        r.train.total, r.val.total);
          err << line << std::flush;
        };
      }
      auto run = [&](auto tag) {
        using Scalar = decltype(tag);
        const TrainResult<Scalar> result = train<Scalar>(train_set, val_set, cfg.train, hooks);
        save_checkpoint(result.model, ckpt);
        write_text(fs::path(train_out) / "history.csv", history_csv(result.history));
        write_text(fs::path(train_out) / "history.json", history_json(result.history, result.best_epoch));
        write_text(fs::path(train_out) / "config.txt", config_text(cfg));
        out << "best epoch " << result.best_epoch << ", checkpoint " << ckpt.string() << "\n";
      };
      if (cfg.precision == "float") {
        run(float{});
      } else {
        run(double{});
      }
      return 0;
    }

    if (forecast->parsed()) {
      const ClipAnnotation clip = load_clip_file(forecast_clip);
      return with_checkpoint(forecast_ckpt, [&](const auto& model) {
        CliConfig cfg;
        cfg.train = model.config;
        forecast_c.overrides.apply(cfg);
        const OccurrencePrediction p =
            forecast_occurrence(model, clip, cfg.train.seen_frames, cfg.train.threshold);
        out << prediction_json(clip.clip_id, p, cfg.train.seen_frames, cfg.train.threshold);
        return 0;
      });
    }

    if (eval->parsed()) {
      const auto test_set = load_dir(eval_data, eval_split);
      auto finish = [&](const PredictionMap& preds, const MatchConfig& match) {
        const TruthMap gts = ground_truth(test_set);
        const EvalReport report = make_report(preds, gts, match);
        if (!eval_out.empty()) {
          ensure_dir(eval_out);
          write_text(fs::path(eval_out) / "eval_report.json", report_to_json(report));
          write_text(fs::path(eval_out) / "eval_report.csv", report_to_csv(report));
          write_text(fs::path(eval_out) / "predictions.csv", per_clip_csv(preds, gts));
        }
        out << report_to_json(report);
        return 0;
      };
      if (test_set.empty()) throw EmptyInput("split '" + eval_split + "' has no clips");
      if (eval_baseline) {
        const CliConfig cfg = resolve(eval_c);
        cfg.match.validate();
        const auto train_set = load_split(eval_data, "train");
        return finish(predict_all(baseline_mean_predictor(train_set), test_set), cfg.match);
      }
      if (eval_ckpt.empty()) throw ConfigError("eval needs --checkpoint or --baseline");
      return with_checkpoint(eval_ckpt, [&](const auto& model) {
        CliConfig cfg = eval_c.config_path.empty() ? CliConfig{} : resolve(Common{eval_c.config_path, {}});
        cfg.train.seen_frames = model.config.seen_frames;
        cfg.train.threshold = model.config.threshold;
        eval_c.overrides.apply(cfg);
        cfg.match.validate();
        return finish(predict_all(model_predictor(model, cfg.train.seen_frames, cfg.train.threshold), test_set),
                      cfg.match);
      });
    }

    if (grad->parsed()) {
      const CliConfig cfg = resolve(grad_c);
      double worst = 0.0;
      for (const auto& c : gradcheck_suite(cfg.train.seed, !grad_quick)) {
        char line[200];
        std::snprintf(line, sizeof line, "%-24s max_rel_err %.3e  checked %zu  kinks %zu  draws %d\n",
                      c.name.c_str(), c.result.max_rel_error, c.result.checked, c.result.kink_crossings,
                      c.attempts);
        out << line;
        worst = std::max(worst, c.result.max_rel_error);
      }
      char line[80];
      std::snprintf(line, sizeof line, "max_rel_error %.3e\n", worst);
      out << line;
      return worst < grad_tolerance ? 0 : 1;
    }

    if (plot->parsed()) {
      ensure_dir(plot_out);
      bool wrote = false;
      if (!plot_history.empty()) {
        const auto history = history_from_json(read_text(plot_history));
        write_text(fs::path(plot_out) / "loss_curve.csv", history_csv(history));
        out << "wrote " << (fs::path(plot_out) / "loss_curve.csv").string() << "\n";
        wrote = true;
      }
      if (!plot_ckpt.empty() || !plot_data.empty()) {
        if (plot_ckpt.empty() || plot_data.empty()) {
          throw ConfigError("per-clip errors need both --checkpoint and --data");
        }
        const auto clips = load_dir(plot_data, plot_split);
        with_checkpoint(plot_ckpt, [&](const auto& model) {
          CliConfig cfg;
          cfg.train = model.config;
          plot_c.overrides.apply(cfg);
          const PredictionMap preds =
              predict_all(model_predictor(model, cfg.train.seen_frames, cfg.train.threshold), clips);
          write_text(fs::path(plot_out) / "clip_errors.csv", per_clip_csv(preds, ground_truth(clips)));
          return 0;
        });
        out << "wrote " << (fs::path(plot_out) / "clip_errors.csv").string() << "\n";
        wrote = true;
      }
      if (!wrote) throw ConfigError("plot-data needs --history and/or --checkpoint with --data");
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "gift: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "gift: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace gift
