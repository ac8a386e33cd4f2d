#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "ainr/audio.hpp"
#include "ainr/error.hpp"
#include "ainr/fewsound.hpp"
#include "ainr/inr.hpp"
#include "ainr/io_util.hpp"
#include "ainr/metrics.hpp"
#include "ainr/model_io.hpp"
#include "ainr/trainer.hpp"

namespace ainr::cli {

namespace {

// Flags for every InrConfig field. Values not given on the command line fall
// back to InrConfig::defaults_for(arch).
struct InrFlags {
  std::string arch = "kan";
  std::vector<std::size_t> layers;
  std::size_t encoding_length = 0;
  std::size_t rff_features = 0;
  double rff_sigma = 0, omega0 = 0, wire_scale = 0, finer_bias_bound = 0;
  std::size_t grid_size = 0, spline_order = 0;
  bool scale_spline = true;
  double spline_lo = 0, spline_hi = 0;
  std::uint64_t seed = 0;
  std::vector<CLI::Option*> opts;

  void add(CLI::App& app, bool with_arch = true) {
    if (with_arch)
      app.add_option("--arch", arch, "nerf | siren | rff | wire | finer | kan")
          ->check(CLI::IsMember({"nerf", "siren", "rff", "wire", "finer", "kan"}));
    opts = {
        app.add_option("--layers", layers, "hidden widths, comma separated")->delimiter(','),
        app.add_option("--encoding-length", encoding_length, "positional-encoding octaves L"),
        app.add_option("--rff-features", rff_features, "random Fourier feature count"),
        app.add_option("--rff-sigma", rff_sigma, "std of the RFF projection"),
        app.add_option("--omega0", omega0, "sine frequency (siren, finer, wire)"),
        app.add_option("--wire-scale", wire_scale, "Gabor scale s0 (wire)"),
        app.add_option("--finer-bias-bound", finer_bias_bound, "first-layer bias bound (finer)"),
        app.add_option("--grid-size", grid_size, "spline grid intervals G (kan)"),
        app.add_option("--spline-order", spline_order, "spline degree k (kan)"),
        app.add_option("--scale-spline", scale_spline, "learnable spline scale (kan)"),
        app.add_option("--spline-lo", spline_lo, "spline domain lower bound (kan)"),
        app.add_option("--spline-hi", spline_hi, "spline domain upper bound (kan)"),
        app.add_option("--seed", seed, "initialisation seed"),
    };
  }

  bool given(std::size_t i) const { return opts[i]->count() > 0; }

  InrConfig resolve(Arch a) const {
    InrConfig c = InrConfig::defaults_for(a);
    if (given(0)) c.layers = layers;
    if (given(1)) c.encoding_length = encoding_length;
    if (given(2)) c.rff_features = rff_features;
    if (given(3)) c.rff_sigma = rff_sigma;
    if (given(4)) c.omega0 = omega0;
    if (given(5)) c.wire_scale = wire_scale;
    if (given(6)) c.finer_bias_bound = finer_bias_bound;
    if (given(7)) c.grid_size = grid_size;
    if (given(8)) c.spline_order = spline_order;
    if (given(9)) c.scale_spline = scale_spline;
    if (given(10)) c.spline_lo = spline_lo;
    if (given(11)) c.spline_hi = spline_hi;
    c.seed = seed;
    c.validate();
    return c;
  }
  InrConfig resolve() const { return resolve(parse_arch(arch)); }
};

struct TrainFlags {
  TrainConfig config;
  std::string precision = "f64";

  void add(CLI::App& app) {
    app.add_option("--steps", config.steps, "optimisation steps")->capture_default_str();
    app.add_option("--lr", config.lr, "learning rate (default: 5e-3 kan, 1e-4 otherwise)");
    app.add_option("--weight-decay", config.weight_decay)->capture_default_str();
    app.add_option("--lambda-time", config.lambda_time, "weight of the L1 term")->capture_default_str();
    app.add_option("--lambda-freq", config.lambda_freq, "weight of the mel-STFT term")
        ->capture_default_str();
    app.add_option("--precision", precision, "f64 | f32")->check(CLI::IsMember({"f64", "f32"}));
  }
  TrainConfig resolve(std::uint64_t seed) const {
    TrainConfig c = config;
    c.seed = seed;
    c.precision = precision == "f32" ? Precision::f32 : Precision::f64;
    c.validate();
    return c;
  }
};

std::string metrics_line(const MetricsRow& row) {
  MetricsReport r;
  r.add(row);
  const std::string csv = r.to_csv();
  // header + the row itself; drop the aggregate lines.
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  return header + "\n" + line + "\n";
}

AudioClip read_clip(const std::string& path, std::uint32_t sample_rate) {
  AudioClip clip = wav_read(path);
  if (sample_rate > 0) clip = resample(clip, sample_rate);
  return clip;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Audio implicit neural representations", "ainr"};
  app.require_subcommand(1);
  std::function<void()> run;

  // paramcount
  InrFlags pc_inr;
  auto* pc = app.add_subcommand("paramcount", "print the parameter count of an INR config");
  pc_inr.add(*pc);
  pc->callback([&] { run = [&] { out << param_count(pc_inr.resolve()) << '\n'; }; });

  // fit
  InrFlags fit_inr_flags;
  TrainFlags fit_train;
  std::string fit_input, fit_output, fit_report, fit_trace;
  std::uint32_t fit_rate = 0;
  auto* fit = app.add_subcommand("fit", "fit one INR to a WAV clip");
  fit->add_option("--input,-i", fit_input, "input WAV")->required();
  fit->add_option("--output,-o", fit_output, "model file to write")->required();
  fit->add_option("--report", fit_report, "metrics CSV to write");
  fit->add_option("--trace", fit_trace, "loss trace CSV (step,loss,lr)");
  fit->add_option("--sample-rate", fit_rate, "resample the clip first (0 keeps its rate)");
  fit_inr_flags.add(*fit);
  fit_train.add(*fit);
  fit->callback([&] {
    run = [&] {
      const InrConfig config = fit_inr_flags.resolve();
      const TrainConfig train = fit_train.resolve(config.seed);
      const AudioClip clip = read_clip(fit_input, fit_rate);
      const FitResult result = fit_inr(clip, config, train);
      save_model(fit_output, result.model);
      if (!fit_trace.empty()) write_trace_csv(fit_trace, result.loss_trace, train.lr_for(config.arch));
      const std::string line = metrics_line(
          {clip.source_id, std::string(arch_name(config.arch)), result.model.param_count(), result.metrics});
      if (!fit_report.empty()) write_file_atomic(fit_report, line);
      out << line;
    };
  });

  // eval
  std::string eval_model, eval_input, eval_report;
  std::uint32_t eval_rate = 0;
  auto* eval = app.add_subcommand("eval", "score a model file against a WAV clip");
  eval->add_option("--model,-m", eval_model, "model file")->required();
  eval->add_option("--input,-i", eval_input, "reference WAV")->required();
  eval->add_option("--report", eval_report, "metrics CSV to write");
  eval->add_option("--sample-rate", eval_rate, "resample the clip first (0 keeps its rate)");
  eval->callback([&] {
    run = [&] {
      const InrModel model = load_model(eval_model);
      const AudioClip clip = read_clip(eval_input, eval_rate);
      const std::string line = metrics_line({clip.source_id, std::string(arch_name(model.config().arch)),
                                             model.param_count(), evaluate(model, clip)});
      if (!eval_report.empty()) write_file_atomic(eval_report, line);
      out << line;
    };
  });

  // compare
  InrFlags cmp_inr;
  TrainFlags cmp_train;
  std::string cmp_dataset, cmp_output, cmp_clips;
  std::vector<std::string> cmp_archs{"nerf", "siren", "rff", "wire", "finer", "kan"};
  std::size_t cmp_crop = 0, cmp_workers = 1;
  std::uint32_t cmp_rate = kDefaultSampleRate;
  auto* cmp = app.add_subcommand("compare", "fit every architecture on every clip of a directory");
  cmp->add_option("--dataset,-d", cmp_dataset, "directory of WAV files")->required();
  cmp->add_option("--output,-o", cmp_output, "summary CSV (mean and std per arch)")->required();
  cmp->add_option("--clips", cmp_clips, "per-clip CSV");
  cmp->add_option("--archs", cmp_archs, "architectures, comma separated")
      ->delimiter(',')
      ->check(CLI::IsMember({"nerf", "siren", "rff", "wire", "finer", "kan"}));
  cmp->add_option("--crop", cmp_crop, "random crop length (0 keeps full clips)");
  cmp->add_option("--workers", cmp_workers, "parallel fits")->capture_default_str();
  cmp->add_option("--sample-rate", cmp_rate, "resampling target")->capture_default_str();
  cmp_inr.add(*cmp, false);
  cmp_train.add(*cmp);
  cmp->callback([&] {
    run = [&] {
      std::vector<InrConfig> configs;
      for (const auto& a : cmp_archs) configs.push_back(cmp_inr.resolve(parse_arch(a)));
      const Dataset ds = prepare_dataset(cmp_dataset, {cmp_crop, cmp_inr.seed, cmp_rate});
      for (const auto& w : ds.warnings) err << "warning: " << w << '\n';
      const MetricsReport report =
          compare_archs(ds.clips, configs, cmp_train.resolve(cmp_inr.seed), cmp_workers);
      for (const auto& [id, why] : report.skipped()) err << "warning: skipped " << id << ": " << why << '\n';
      write_file_atomic(cmp_output, report.to_table_csv());
      if (!cmp_clips.empty()) write_file_atomic(cmp_clips, report.to_csv());
      out << report.to_table_csv();
    };
  });

  // meta-train
  InrFlags mt_inr;
  FewSoundConfig mt;
  std::string mt_dataset, mt_output, mt_trace;
  auto* meta = app.add_subcommand("meta-train", "train the FewSound hypernetwork on a directory");
  meta->add_option("--dataset,-d", mt_dataset, "directory of WAV files")->required();
  meta->add_option("--output,-o", mt_output, "state file to write")->required();
  meta->add_option("--trace", mt_trace, "epoch loss CSV (epoch,loss)");
  meta->add_option("--window", mt.window, "samples per window")->capture_default_str();
  meta->add_option("--embedding-dim", mt.embedding_dim)->capture_default_str();
  meta->add_option("--stem-channels", mt.stem_channels)->capture_default_str();
  meta->add_option("--block-channels", mt.block_channels, "encoder block widths")->delimiter(',');
  meta->add_option("--kernel", mt.kernel, "encoder kernel size")->capture_default_str();
  meta->add_option("--weight-encoder-hidden", mt.weight_encoder_hidden)->capture_default_str();
  meta->add_option("--hyper-hidden", mt.hyper_hidden, "hypernetwork hidden widths")->delimiter(',');
  meta->add_option("--epochs", mt.epochs)->capture_default_str();
  meta->add_option("--batch-size", mt.batch_size)->capture_default_str();
  meta->add_option("--lr", mt.lr, "peak lr (default: 1e-5, 1e-6 for siren)");
  meta->add_option("--weight-decay", mt.weight_decay)->capture_default_str();
  meta->add_option("--warmup-fraction", mt.warmup_fraction)->capture_default_str();
  meta->add_option("--div-factor", mt.div_factor)->capture_default_str();
  meta->add_option("--final-div-factor", mt.final_div_factor)->capture_default_str();
  meta->add_option("--lambda-time", mt.lambda_time)->capture_default_str();
  meta->add_option("--lambda-freq", mt.lambda_freq)->capture_default_str();
  meta->add_option("--sample-rate", mt.sample_rate)->capture_default_str();
  mt_inr.add(*meta);
  meta->callback([&] {
    run = [&] {
      mt.target = mt_inr.resolve();
      mt.seed = mt_inr.seed;
      const Dataset ds = prepare_dataset(mt_dataset, {mt.window, mt.seed, mt.sample_rate});
      for (const auto& w : ds.warnings) err << "warning: " << w << '\n';
      const auto result = meta_train(ds.clips, mt, [&](std::size_t epoch, double loss) {
        err << "epoch " << epoch + 1 << '/' << mt.epochs << " loss " << loss << '\n';
      });
      save_state(mt_output, result.state);
      if (!mt_trace.empty()) {
        std::ostringstream os;
        os.precision(17);
        os << "epoch,loss\n";
        for (std::size_t i = 0; i < result.epoch_losses.size(); ++i)
          os << i + 1 << ',' << result.epoch_losses[i] << '\n';
        write_file_atomic(mt_trace, os.str());
      }
      out << result.epoch_losses.back() << '\n';
    };
  });

  // reconstruct
  std::string rc_state, rc_input, rc_output;
  bool rc_pcm16 = false, rc_clamp = false;
  auto* rc = app.add_subcommand("reconstruct", "re-synthesise a WAV of any length with a FewSound state");
  rc->add_option("--state,-s", rc_state, "state file")->required();
  rc->add_option("--input,-i", rc_input, "input WAV")->required();
  rc->add_option("--output,-o", rc_output, "output WAV")->required();
  rc->add_flag("--pcm16", rc_pcm16, "write PCM-16 instead of float-32");
  rc->add_flag("--clamp", rc_clamp, "clamp to [-1, 1) for PCM-16");
  rc->callback([&] {
    run = [&] {
      const FewSoundState state = load_state(rc_state);
      const AudioClip clip = resample(wav_read(rc_input), state.config.sample_rate);
      AudioClip outclip{state.config.sample_rate, reconstruct_long(state, clip.samples), rc_output};
      wav_write(rc_output, outclip, rc_pcm16 ? WavFormat::pcm16 : WavFormat::float32, rc_clamp);
      out << outclip.samples.size() << '\n';
    };
  });

  // spectrogram
  std::string sp_input, sp_output;
  StftResolution sp_res = lsd_resolution();
  auto* sp = app.add_subcommand("spectrogram", "export a dB spectrogram as CSV and PGM");
  sp->add_option("--input,-i", sp_input, "input WAV")->required();
  sp->add_option("--output,-o", sp_output, "output stem (writes .csv and .pgm)")->required();
  sp->add_option("--fft", sp_res.fft_size)->capture_default_str();
  sp->add_option("--hop", sp_res.hop_size)->capture_default_str();
  sp->add_option("--window", sp_res.window_size)->capture_default_str();
  sp->callback([&] {
    run = [&] {
      sp_res.validate();
      const AudioClip clip = wav_read(sp_input);
      spectrogram_export(clip.samples, sp_output, sp_res);
      out << sp_res.frames(clip.samples.size()) << 'x' << sp_res.bins() << '\n';
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (run) run();
    return 0;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace ainr::cli
