/*
 * Copyright 2026 The audiodream Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "CLI11.hpp"

#include "audiodream/checkpoint.hpp"
#include "audiodream/clip.hpp"
#include "audiodream/dataset.hpp"
#include "audiodream/dreamer.hpp"
#include "audiodream/genre_net.hpp"
#include "audiodream/trainer.hpp"

namespace audiodream {

namespace detail {

inline void report_skipped(const Dataset& ds, std::ostream& err) {
  for (const auto& s : ds.skipped) err << "skipped " << s.path.string() << ": " << s.reason << "\n";
}

inline void print_counts(const Dataset& ds, std::ostream& out) {
  out << "clips:";
  for (std::size_t g = 0; g < kGenres.size(); ++g) out << " " << kGenres[g] << "=" << ds.per_genre[g];
  out << " total=" << ds.clips.size() << "\n";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace detail

/// Entry point of the audiodream tool. Returns 0 only when the requested
/// command completed.
inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Genre classifier training, evaluation and audio dreaming", "audiodream"};
  app.require_subcommand(1);

  std::string manifest, model, ckpt_out, log_path, in_wav, out_wav, trace_path, layers = "all";
  TrainConfig tcfg;
  DreamConfig dcfg;
  bool no_grad_norm = false;
  std::uint64_t seed = 0;

  auto* train_cmd = app.add_subcommand("train", "Train a classifier from a manifest");
  train_cmd->add_option("--manifest", manifest, "CSV with header path,genre")->required();
  train_cmd->add_option("--out", ckpt_out, "Checkpoint to write")->required();
  train_cmd->add_option("--epochs", tcfg.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--batch-size", tcfg.batch_size, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--lr", tcfg.learning_rate, "Learning rate")->capture_default_str();
  train_cmd->add_option("--momentum", tcfg.momentum, "Nesterov momentum")->capture_default_str();
  train_cmd->add_option("--seed", seed, "Initialization and shuffling seed")->capture_default_str();
  train_cmd->add_option("--log", log_path, "Epoch log CSV (default: <out>.epochs.csv)");

  auto* eval_cmd = app.add_subcommand("eval", "Report per-genre accuracy");
  eval_cmd->add_option("--manifest", manifest, "CSV with header path,genre")->required();
  eval_cmd->add_option("--model", model, "Checkpoint")->required();

  auto* dream_cmd = app.add_subcommand("dream", "Modify a clip by gradient ascent on layer activations");
  dream_cmd->add_option("--model", model, "Checkpoint")->required();
  dream_cmd->add_option("--in", in_wav, "Input WAV")->required();
  dream_cmd->add_option("--out", out_wav, "Output WAV (16-bit PCM, 8 kHz)")->required();
  dream_cmd->add_option("--layers", layers, "Layers to maximize: 1,2,3 subset or all")->capture_default_str();
  dream_cmd->add_option("--steps", dcfg.steps, "Ascent steps")->capture_default_str();
  dream_cmd->add_option("--step-size", dcfg.step_size, "Ascent step size")->capture_default_str();
  dream_cmd->add_flag("--no-grad-norm", no_grad_norm, "Use the raw gradient");
  dream_cmd->add_option("--trace", trace_path, "Objective trace CSV");

  auto* inspect_cmd = app.add_subcommand("inspect", "Print architecture and parameter counts");
  inspect_cmd->add_option("--model", model, "Checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (*train_cmd) {
      tcfg.shuffle_seed = seed;
      tcfg.validate();
      const Dataset ds = ingest(std::filesystem::path(manifest));
      detail::report_skipped(ds, err);
      detail::print_counts(ds, out);
      GenreNet net = init_parameters(seed);
      const TrainState state = train(net, ds.view(), tcfg, [&out](const EpochRecord& r) {
        out << "epoch " << r.epoch << " loss " << r.loss << " time " << r.seconds << "s\n";
      });
      checkpoint_save(net, ckpt_out);
      const std::string log = log_path.empty() ? ckpt_out + ".epochs.csv" : log_path;
      detail::write_text(log, epoch_log_csv(state.epoch_log));
      out << "wrote " << ckpt_out << " and " << log << "\n";
    } else if (*eval_cmd) {
      const GenreNet net = checkpoint_load(std::filesystem::path(model));
      const Dataset ds = ingest(std::filesystem::path(manifest));
      detail::report_skipped(ds, err);
      const EvalReport report = evaluate(net, ds.view());
      out << format_accuracy_table(report) << to_json(report).dump(2) << "\n";
    } else if (*dream_cmd) {
      dcfg.layers = LayerSelection::parse(layers);
      dcfg.normalize_gradient = !no_grad_norm;
      dcfg.validate();
      const GenreNet net = checkpoint_load(std::filesystem::path(model));
      if (net.arch.input_length != kClipSamples) {
        throw ConfigError("model input length " + std::to_string(net.arch.input_length) +
                          " does not match the clip length");
      }
      const auto clips = clips_from_wav(read_file(in_wav));
      if (clips.empty()) throw ConfigError(in_wav + " is shorter than one five-second clip");
      if (clips.size() > 1) {
        out << in_wav << " holds " << clips.size() << " clips; dreaming on the first clip only\n";
      }
      const ClipDream result = dream(net, clips.front(), dcfg);
      write_file(out_wav, wav_encode(clip_to_wave(result.clip)));
      if (!trace_path.empty()) detail::write_text(trace_path, result.trace.csv());
      out << "objective " << result.trace.objective.front() << " -> " << result.trace.objective.back()
          << " over " << dcfg.steps << " steps (layers " << dcfg.layers.to_string() << ")\n"
          << "wrote " << out_wav << "\n";
    } else if (*inspect_cmd) {
      const GenreNet net = checkpoint_load(std::filesystem::path(model));
      const auto& a = net.arch;
      out << "input  [1, " << a.input_length << "]\n";
      std::size_t total = 0;
      for (std::size_t i = 0; i < kConvLayers; ++i) {
        const std::size_t n = net.conv[i].weights.size() + net.conv[i].bias.size() +
                              net.bn[i].gamma.size() + net.bn[i].beta.size();
        total += n;
        out << "conv" << i + 1 << "  filters " << a.channels << " x " << a.in_channels(i) << " x "
            << a.kernels[i] << ", stride " << a.stride << " -> [" << a.channels << ", " << a.frames(i)
            << "]  batchnorm+rectify  params " << n << "\n";
      }
      const std::size_t nd = net.dense.weights.size() + net.dense.bias.size();
      total += nd;
      out << "dense  " << a.dense_inputs() << " -> " << a.classes << "  params " << nd << "\n";
      out << "trainable parameters " << total << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace audiodream
