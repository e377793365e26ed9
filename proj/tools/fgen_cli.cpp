// fgen: featurize WAV audio, train frequency-domain LSTM models, generate
// continuations, and run the built-in verification suites.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fgen/fgen.hpp"
#include "fgen/verify.hpp"

namespace fs = std::filesystem;
using namespace fgen;

namespace {

AudioClip load_clip(const std::string& path, int rate) {
  auto clip = read_wav(path);
  if (clip.sample_rate != rate) {
    std::fprintf(stderr, "note: resampling '%s' from %d Hz to %d Hz (linear interpolation)\n", path.c_str(),
                 clip.sample_rate, rate);
    clip = resample_linear(clip, rate);
  }
  return clip;
}

std::vector<std::string> sorted_files(const fs::path& dir, const std::string& ext) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::string format_row(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%llu,%.9e,%.9e,%.3f\n", static_cast<unsigned long long>(r.epoch), r.data_loss,
                r.total_loss, r.seconds);
  return buf;
}

struct FeaturizeArgs {
  std::vector<std::string> inputs;
  std::size_t frame_size = 4000;
  int sample_rate = 16000;
  std::string out;
};

int run_featurize(const FeaturizeArgs& a) {
  fs::create_directories(a.out);
  const FrameSpec spec{a.frame_size, a.sample_rate};
  for (const auto& in : a.inputs) {
    const auto features = featurize_clip(load_clip(in, a.sample_rate), spec);
    const auto out = (fs::path(a.out) / fs::path(in).stem()).string() + ".fgf";
    save_features(out, features, fs::path(in).filename().string());
    std::printf("%s: %zu frames of dimension %zu -> %s\n", in.c_str(), features.size(), spec.dim(), out.c_str());
  }
  return 0;
}

struct TrainArgs {
  std::vector<std::string> data;
  std::string arch = "base";
  std::size_t hidden = 2048;
  std::size_t frame_size = 4000;
  int sample_rate = 16000;
  std::size_t frames_per_step = 3;
  std::string resume;
  std::string out;
  std::uint64_t model_seed = 0;
  bool model_seed_set = false;
  bool no_wall_clock = false;
  TrainingConfig cfg;
};

// Loads every input into feature sequences. Directories contribute their
// .fgf files and then their .wav files, each in name order.
std::vector<FeatureSequence> load_corpus(const TrainArgs& a, FrameSpec& spec) {
  std::vector<std::string> fgf, wav;
  for (const auto& d : a.data) {
    if (fs::is_directory(d)) {
      for (auto& f : sorted_files(d, ".fgf")) fgf.push_back(f);
      for (auto& f : sorted_files(d, ".wav")) wav.push_back(f);
    } else if (fs::path(d).extension() == ".fgf") {
      fgf.push_back(d);
    } else {
      wav.push_back(d);
    }
  }
  std::vector<FeatureSequence> out;
  bool have_spec = false;
  for (const auto& f : fgf) {
    auto feats = load_features(f);
    if (!have_spec) {
      spec = feats.spec;
      have_spec = true;
    } else if (feats.spec.frame_size != spec.frame_size || feats.spec.sample_rate != spec.sample_rate) {
      throw std::runtime_error("feature file '" + f + "' uses a different frame spec");
    }
    out.push_back(std::move(feats));
  }
  if (!have_spec) spec = FrameSpec{a.frame_size, a.sample_rate};
  for (const auto& w : wav) {
    auto clip = load_clip(w, spec.sample_rate);
    if (clip.samples.size() < spec.frame_size) {
      std::fprintf(stderr, "note: '%s' is shorter than one frame, skipped\n", w.c_str());
      continue;
    }
    out.push_back(featurize_clip(clip, spec));
  }
  if (out.empty()) throw std::runtime_error("no training data found");
  return out;
}

int run_train(TrainArgs a) {
  a.cfg.record_wall_clock = !a.no_wall_clock;
  a.cfg.validate();
  FrameSpec spec;
  const auto corpus = load_corpus(a, spec);
  const auto data = build_dataset<float>(std::span<const FeatureSequence>(corpus), spec, a.cfg.timesteps, a.cfg.stride);

  std::optional<Checkpoint> resume;
  ArchitectureConfig arch;
  if (!a.resume.empty()) {
    resume = load_checkpoint(a.resume);
    arch = resume->arch;
    if (arch.frame_size != spec.frame_size || arch.sample_rate != spec.sample_rate)
      throw std::runtime_error("checkpoint frame spec does not match the training data");
  } else {
    arch.variant = parse_variant(a.arch);
    arch.frame_size = spec.frame_size;
    arch.sample_rate = spec.sample_rate;
    arch.hidden = a.hidden;
    arch.frames_per_step = arch.variant == Variant::Conv2dLstm ? a.frames_per_step : 1;
    arch.seed = a.model_seed_set ? a.model_seed : a.cfg.seed;
  }
  Model<float> model(arch);
  TrainerState<float> state = fresh_trainer_state(model, a.cfg);
  if (resume) {
    apply_checkpoint(*resume, model);
    state = trainer_state_from_checkpoint<float>(*resume);
  }
  std::fprintf(stderr, "%s: %zu parameters, %zu sequences of %zu steps, D=%zu\n", variant_name(arch.variant),
               model.parameter_count(), data.size(), data.timesteps, spec.dim());
  for (auto e : a.cfg.checkpoint_epochs)
    if (e > a.cfg.epochs)
      std::fprintf(stderr, "note: checkpoint epoch %llu is beyond --epochs %llu and will not be written\n",
                   static_cast<unsigned long long>(e), static_cast<unsigned long long>(a.cfg.epochs));

  fs::create_directories(a.out);
  const auto csv_path = (fs::path(a.out) / "loss.csv").string();
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write '" + csv_path + "'");
  csv << "epoch,data_loss,total_loss,seconds\n";

  TrainingSinks<float> sinks;
  sinks.on_epoch = [&](const EpochRecord& r) {
    csv << format_row(r);
    csv.flush();
    if (r.epoch == 1 || r.epoch % 10 == 0 || r.epoch == a.cfg.epochs)
      std::fprintf(stderr, "epoch %llu  data %.6e  total %.6e\n", static_cast<unsigned long long>(r.epoch),
                   r.data_loss, r.total_loss);
  };
  std::optional<Checkpoint> last;
  sinks.on_checkpoint = [&](std::uint64_t epoch, const Model<float>& m, const TrainerState<float>& st) {
    last = make_checkpoint(m, a.cfg, st);
    const auto path = (fs::path(a.out) / ("epoch_" + std::to_string(epoch) + ".fgn")).string();
    save_checkpoint(path, *last);
    std::fprintf(stderr, "wrote %s\n", path.c_str());
  };
  train(model, data, a.cfg, state, sinks);
  // train() always reports the final state last.
  if (last) save_checkpoint((fs::path(a.out) / "final.fgn").string(), *last);
  return 0;
}

struct GenerateArgs {
  std::string checkpoint;
  std::string seed_wav;
  std::size_t frames = 40;
  std::string mode = "window";
  std::string out;
  long long offset = -1;
  std::uint64_t seed = 0;
  std::size_t timesteps = 0;
  std::string features_out;
};

int run_generate(const GenerateArgs& a) {
  const auto ck = load_checkpoint(a.checkpoint);
  auto model = model_from_checkpoint<float>(ck);
  const FrameSpec spec{ck.arch.frame_size, ck.arch.sample_rate};
  const auto mode = parse_generation_mode(a.mode);
  const std::size_t T = a.timesteps ? a.timesteps : ck.training.timesteps;
  const auto features = featurize_clip(load_clip(a.seed_wav, spec.sample_rate), spec);
  const std::size_t need = mode == GenerationMode::Window ? T : 1;
  if (features.size() < need)
    throw std::runtime_error("seed audio holds " + std::to_string(features.size()) + " frames, need " +
                             std::to_string(need));
  const std::size_t seed_len = std::min(T, features.size());
  std::size_t offset;
  if (a.offset >= 0) {
    offset = static_cast<std::size_t>(a.offset);
    if (offset + seed_len > features.size()) throw std::runtime_error("--offset leaves fewer than T seed frames");
  } else {
    Rng rng(a.seed);
    offset = static_cast<std::size_t>(rng.below(features.size() - seed_len + 1));
  }
  std::fprintf(stderr, "seed: frames %zu..%zu of '%s' (offset %zu)\n", offset, offset + seed_len - 1,
               a.seed_wav.c_str(), offset);
  std::vector<Tensor<float>> seed;
  for (std::size_t i = 0; i < seed_len; ++i)
    seed.push_back(Tensor<float>::from<double>(features.vectors[offset + i]));
  const auto frames = generate(model, std::move(seed), a.frames, mode, T);
  const auto out_features = to_features<float>(frames, spec);
  if (!a.features_out.empty()) save_features(a.features_out, out_features, "generated");
  const auto rep = synthesize(out_features, a.out);
  std::printf("wrote %s: %zu samples (%.2f s), peak %.4f, clamped %zu, imaginary residue %.4e\n", a.out.c_str(),
              rep.samples, static_cast<double>(rep.samples) / spec.sample_rate, rep.peak, rep.clamped,
              rep.imaginary_residue);
  return 0;
}

struct SpectrogramArgs {
  std::string in;
  std::size_t frame_size = 4000;
  int sample_rate = 16000;
  std::string out;
};

int run_spectrogram(const SpectrogramArgs& a) {
  const auto pgm = spectrogram_pgm(load_clip(a.in, a.sample_rate), FrameSpec{a.frame_size, a.sample_rate});
  binio::write_file(a.out, std::vector<char>(pgm.begin(), pgm.end()));
  std::printf("wrote %s\n", a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-domain LSTM audio generation"};
  app.require_subcommand(1);

  FeaturizeArgs fa;
  auto* featurize = app.add_subcommand("featurize", "Convert WAV files into packed DFT feature files");
  featurize->add_option("--in", fa.inputs, "Input WAV files")->required();
  featurize->add_option("--frame-size", fa.frame_size, "Samples per frame (n)")->check(CLI::Range(2, 1 << 24));
  featurize->add_option("--sample-rate", fa.sample_rate, "Pipeline sample rate")->check(CLI::PositiveNumber);
  featurize->add_option("--out", fa.out, "Output directory")->required();

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train a model with teacher-forced BPTT and RMSProp");
  trn->add_option("--data", ta.data, "Feature directory, .fgf files, or WAV files")->required();
  trn->add_option("--arch", ta.arch, "base|fc_lstm|conv1d_lstm|conv2d_lstm|stacked|bilinear");
  trn->add_option("--hidden", ta.hidden, "LSTM hidden size")->check(CLI::PositiveNumber);
  trn->add_option("--timesteps", ta.cfg.timesteps, "Unroll length T")->check(CLI::PositiveNumber);
  trn->add_option("--epochs", ta.cfg.epochs, "Training epochs");
  trn->add_option("--lr", ta.cfg.learning_rate, "RMSProp learning rate");
  trn->add_option("--batch", ta.cfg.batch_size, "Sequences per batch")->check(CLI::PositiveNumber);
  trn->add_option("--seed", ta.cfg.seed, "Run seed (shuffling, dropout, and default init)");
  trn->add_option("--model-seed", ta.model_seed, "Initialization seed (defaults to --seed)")
      ->each([&](const std::string&) { ta.model_seed_set = true; });
  trn->add_option("--out", ta.out, "Output directory for loss.csv and checkpoints")->required();
  trn->add_option("--frame-size", ta.frame_size, "Frame size for WAV inputs")->check(CLI::Range(2, 1 << 24));
  trn->add_option("--sample-rate", ta.sample_rate, "Sample rate for WAV inputs")->check(CLI::PositiveNumber);
  trn->add_option("--frames-per-step", ta.frames_per_step, "K, frames stacked per step (conv2d_lstm)")
      ->check(CLI::PositiveNumber);
  trn->add_option("--dropout-lstm", ta.cfg.dropout_lstm, "LSTM input/recurrent dropout");
  trn->add_option("--dropout-dense", ta.cfg.dropout_dense, "Dropout after the FC frontend");
  trn->add_option("--l2", ta.cfg.l2_lambda, "L2 coefficient on dense weights");
  trn->add_option("--rmsprop-decay", ta.cfg.rmsprop_decay, "RMSProp decay rho");
  trn->add_option("--rmsprop-epsilon", ta.cfg.rmsprop_epsilon, "RMSProp epsilon");
  trn->add_option("--checkpoint-epochs", ta.cfg.checkpoint_epochs, "Epochs at which to write checkpoints")
      ->delimiter(',');
  trn->add_option("--stride", ta.cfg.stride, "Window stride in frames (default T+1, non-overlapping)");
  trn->add_option("--clip-norm", ta.cfg.clip_norm, "Global gradient-norm clip (0 = off)");
  trn->add_option("--threads", ta.cfg.threads, "Worker threads for intra-batch parallelism")
      ->check(CLI::PositiveNumber);
  trn->add_option("--resume", ta.resume, "Continue from a checkpoint");
  trn->add_flag("--no-wall-clock", ta.no_wall_clock, "Write 0 in the seconds column");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Continue seed audio with a trained model");
  gen->add_option("--checkpoint", ga.checkpoint, "Checkpoint file")->required();
  gen->add_option("--seed-wav", ga.seed_wav, "WAV file supplying the seed frames")->required();
  gen->add_option("--frames", ga.frames, "Frames to generate (M)");
  gen->add_option("--mode", ga.mode, "window|free_run")->check(CLI::IsMember({"window", "free_run"}));
  gen->add_option("--out", ga.out, "Output WAV")->required();
  gen->add_option("--offset", ga.offset, "Seed start frame (default: drawn from --seed)");
  gen->add_option("--seed", ga.seed, "Seed for drawing the seed offset");
  gen->add_option("--timesteps", ga.timesteps, "Window length T (default: from checkpoint)");
  gen->add_option("--features-out", ga.features_out, "Also write the generated features (.fgf)");

  SpectrogramArgs sa;
  auto* spg = app.add_subcommand("spectrogram", "Write a log-magnitude spectrogram as binary PGM");
  spg->add_option("--in", sa.in, "Input WAV")->required();
  spg->add_option("--frame-size", sa.frame_size, "Samples per frame")->check(CLI::Range(2, 1 << 24));
  spg->add_option("--sample-rate", sa.sample_rate, "Pipeline sample rate")->check(CLI::PositiveNumber);
  spg->add_option("--out", sa.out, "Output PGM")->required();

  auto* gck = app.add_subcommand("gradcheck", "Finite-difference check of every primitive and architecture");
  auto* slf = app.add_subcommand("selftest", "DFT, pack/unpack, LSTM and checkpoint self-checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*featurize) return run_featurize(fa);
    if (*trn) return run_train(ta);
    if (*gen) return run_generate(ga);
    if (*spg) return run_spectrogram(sa);
    if (*gck) return verify::print_outcomes(verify::gradcheck_suite()) ? 0 : 1;
    if (*slf) return verify::print_outcomes(verify::selftest_suite()) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
