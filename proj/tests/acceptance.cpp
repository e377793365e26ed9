// Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed here.
// Exit status is 0 iff every criterion passes.

#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fgen/fgen.hpp"
#include "fgen/verify.hpp"
#include "test_util.hpp"

using namespace fgen;
namespace fs = std::filesystem;

namespace {

// Criterion 1
constexpr double kPrimitiveTol = 1e-6;
constexpr double kCompositeTol = 1e-4;
constexpr double kGradBudgetSeconds = 120.0;
// Criterion 2
constexpr double kRoundTripTol = 1e-9;
constexpr double kParsevalTol = 1e-9;
constexpr double kOracleTolPerN = 1e-8;
constexpr double kPackTol = 1e-12;
constexpr double kSpectralBudgetSeconds = 60.0;
// Criterion 3
constexpr double kScalarOracleTol = 1e-12;
// Criterion 4
constexpr std::size_t kDeskFrame = 64;
constexpr std::size_t kDeskHidden = 64;
constexpr std::size_t kDeskSteps = 10;
constexpr std::size_t kDeskBatch = 4;
constexpr double kDeskLearningRate = 1e-4;
constexpr std::uint64_t kDeskEpochs = 500;
constexpr double kDeskRatio = 0.10;
constexpr std::uint64_t kOverfitSteps = 2000;
constexpr double kOverfitMse = 1e-4;
// Overfit continuation at a lower rate, scored by criterion 5.
constexpr std::uint64_t kRefineSteps = 2000;
constexpr double kRefineLearningRate = 1e-5;
constexpr double kDeskBudgetSeconds = 1800.0;
// Criterion 5
constexpr double kNextFrameRelMse = 1e-3;
constexpr std::size_t kGeneratedFrames = 30;
// Criterion 6
constexpr double kMemoryBudgetBytes = 4.0 * 1024 * 1024 * 1024;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Result {
  int id;
  std::string title;
  bool pass = true;
  std::string summary;
};

std::vector<Result> results;

void detail(const char* fmt, auto... args) {
  std::printf("      ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

void report(const Result& r) {
  std::printf("%s  criterion %d: %s -- %s\n", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(), r.summary.c_str());
  std::fflush(stdout);
  results.push_back(r);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

void gradient_correctness() {
  Result r{1, "gradient correctness", true, ""};
  const auto t0 = Clock::now();
  double worst_primitive = 0.0, worst_model = 0.0;
  for (const auto& o : verify::primitive_gradchecks(kPrimitiveTol)) {
    worst_primitive = std::max(worst_primitive, o.value);
    r.pass = r.pass && o.pass;
    if (!o.pass) detail("%s: %.3e", o.name.c_str(), o.value);
  }
  for (const auto& o : verify::model_gradchecks(kCompositeTol)) {
    worst_model = std::max(worst_model, o.value);
    r.pass = r.pass && o.pass;
    detail("%s: %.3e", o.name.c_str(), o.value);
  }
  const double secs = seconds_since(t0);
  r.pass = r.pass && secs < kGradBudgetSeconds;
  r.summary = fmt("primitives %.2e (< %.0e), architectures %.2e (< %.0e), %.1f s (< %.0f s)", worst_primitive,
                  kPrimitiveTol, worst_model, kCompositeTol, secs, kGradBudgetSeconds);
  report(r);
}

void spectral_correctness() {
  Result r{2, "spectral correctness", true, ""};
  const auto t0 = Clock::now();
  Rng rng(2024);
  double worst_rt = 0.0, worst_parseval = 0.0, worst_oracle_ratio = 0.0;
  for (std::size_t n : {3u, 5u, 12u, 100u, 4000u}) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1, 1);
    const auto X = dft_forward(x);
    const std::vector<Complex> cx(x.begin(), x.end());
    const double oracle = verify::max_abs_diff(X, verify::naive_dft(cx));
    const double ratio = oracle / (kOracleTolPerN * static_cast<double>(n));
    worst_oracle_ratio = std::max(worst_oracle_ratio, ratio);
    detail("n=%zu: |fft - naive| %.3e (< %.1e)", n, oracle, kOracleTolPerN * static_cast<double>(n));

    const auto back = dft_inverse(X);
    for (std::size_t j = 0; j < n; ++j) worst_rt = std::max(worst_rt, std::abs(back.samples[j] - x[j]));

    double ex = 0.0, eX = 0.0;
    for (double v : x) ex += v * v;
    for (const auto& c : X) eX += std::norm(c);
    worst_parseval = std::max(worst_parseval, std::abs(ex - eX / static_cast<double>(n)) / ex);
  }
  // Full-size clip round trip through featurize/reconstruct.
  AudioClip clip{16000, {}};
  for (int i = 0; i < 16000; ++i) clip.samples.push_back(rng.uniform(-0.9, 0.9));
  const auto rec = reconstruct_clip(featurize_clip(clip, FrameSpec{}));
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    worst_rt = std::max(worst_rt, std::abs(rec.samples[i] - clip.samples[i]));

  double worst_pack = 0.0;
  for (std::size_t n : {7u, 64u, 4000u}) {
    std::vector<double> v(2 * n);
    for (auto& e : v) e = rng.uniform(-1, 1);
    const auto again = pack(unpack(v, n), n);
    for (std::size_t i = 0; i < v.size(); ++i) worst_pack = std::max(worst_pack, std::abs(again[i] - v[i]));
  }
  const double secs = seconds_since(t0);
  r.pass = worst_rt < kRoundTripTol && worst_parseval < kParsevalTol && worst_oracle_ratio < 1.0 &&
           worst_pack < kPackTol && secs < kSpectralBudgetSeconds;
  r.summary = fmt("round trip %.2e (< %.0e), Parseval %.2e (< %.0e), oracle %.2f of bound, pack %.2e (< %.0e), %.1f s",
                  worst_rt, kRoundTripTol, worst_parseval, kParsevalTol, worst_oracle_ratio, worst_pack, kPackTol,
                  secs);
  report(r);
}

void lstm_semantics() {
  Result r{3, "LSTM semantics", true, ""};
  const double oracle = verify::lstm_scalar_oracle_error();

  bool zeros = true;
  {
    ParameterSet<double> ps;
    auto l = add_lstm_params(ps, "lstm", 5, 4);
    Graph<double> g;
    Tensor<double> x({5});
    for (std::size_t i = 0; i < 5; ++i) x[i] = 0.1 * static_cast<double>(i) - 0.2;
    auto st = lstm_cell_step(g, ps, l, g.constant(x), {g.constant(Tensor<double>({4})), g.constant(Tensor<double>({4}))});
    for (double v : st.h.value().data()) zeros = zeros && v == 0.0;
    for (double v : st.c.value().data()) zeros = zeros && v == 0.0;
  }

  bool swap_exact = true;
  {
    Model<double> m(verify::tiny_config(Variant::Bilinear));
    Rng data(3), unused(0);
    std::vector<Tensor<double>> xs;
    for (int t = 0; t < 6; ++t) {
      Tensor<double> x({m.config().dim()});
      for (auto& v : x.data()) v = data.uniform(-1, 1);
      xs.push_back(x);
    }
    auto run = [&] {
      m.reset_state();
      std::vector<Tensor<double>> out;
      for (const auto& x : xs) out.push_back(m.step(x, Mode::Eval, unused));
      return out;
    };
    const auto before = run();
    m.swap_bilinear_branches();
    swap_exact = run() == before;
  }
  r.pass = oracle < kScalarOracleTol && zeros && swap_exact;
  r.summary = fmt("scalar oracle %.2e (< %.0e), zero step exact: %s, bilinear swap exact: %s", oracle,
                  kScalarOracleTol, zeros ? "yes" : "no", swap_exact ? "yes" : "no");
  report(r);
}

// ---------------------------------------------------------------------------

// Eight half-second clips, each a mixture of three tones at 440, 660 and
// 1100 Hz with per-clip amplitudes and phases.
std::vector<AudioClip> desk_corpus() {
  Rng rng(42);
  const double freqs[3] = {440.0, 660.0, 1100.0};
  std::vector<AudioClip> clips;
  for (int c = 0; c < 8; ++c) {
    double amp[3], phase[3];
    for (int k = 0; k < 3; ++k) {
      phase[k] = rng.uniform(0, 2 * std::numbers::pi);
      amp[k] = rng.uniform(0.15, 0.3);
    }
    AudioClip clip{16000, {}};
    for (int i = 0; i < 8000; ++i) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += amp[k] * std::sin(2 * std::numbers::pi * freqs[k] * i / 16000.0 + phase[k]);
      clip.samples.push_back(s);
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

ArchitectureConfig desk_arch(Variant v) {
  ArchitectureConfig a;
  a.variant = v;
  a.frame_size = kDeskFrame;
  a.hidden = kDeskHidden;
  a.frames_per_step = v == Variant::Conv2dLstm ? 3 : 1;
  a.seed = 1;
  return a;
}

TrainingConfig desk_training(std::uint64_t epochs, std::size_t batch) {
  TrainingConfig tc;
  tc.timesteps = kDeskSteps;
  tc.batch_size = batch;
  tc.learning_rate = kDeskLearningRate;
  tc.epochs = epochs;
  tc.seed = 3;
  tc.dropout_lstm = 0.0;
  tc.dropout_dense = 0.0;
  tc.l2_lambda = 0.0;
  tc.checkpoint_epochs = {};
  return tc;
}

struct OverfitModel {
  Variant variant;
  Model<float> model;
  Sequence<float> sequence;
};

std::vector<OverfitModel> overfit_models;

void desk_scale_learning() {
  Result r{4, "desk-scale learning", true, ""};
  const auto t0 = Clock::now();
  const FrameSpec spec{kDeskFrame, 16000};
  const auto clips = desk_corpus();
  const auto data = build_dataset<float>(std::span<const AudioClip>(clips), spec, kDeskSteps);
  Dataset<float> single{spec, kDeskSteps, {data.sequences.front()}};
  detail("corpus: %zu clips, %zu sequences of %zu steps, n=%zu", clips.size(), data.size(), kDeskSteps, kDeskFrame);

  double worst_ratio = 0.0, worst_overfit = 0.0;
  for (auto v : kAllVariants) {
    const auto tv = Clock::now();
    Model<float> model(desk_arch(v));
    const auto log = train(model, data, desk_training(kDeskEpochs, kDeskBatch));
    const double ratio = log.back().data_loss / log.front().data_loss;

    Model<float> fit(desk_arch(v));
    auto fit_cfg = desk_training(kOverfitSteps, 1);
    auto fit_state = fresh_trainer_state(fit, fit_cfg);
    const auto fit_log = train(fit, single, fit_cfg, fit_state);
    double best = fit_log.front().data_loss;
    std::uint64_t reached = 0;
    for (const auto& rec : fit_log) {
      best = std::min(best, rec.data_loss);
      if (!reached && rec.data_loss < kOverfitMse) reached = rec.epoch;
    }
    const bool ok = ratio < kDeskRatio && reached != 0;
    detail("%-12s epoch1 %.3e  epoch%llu %.3e  ratio %.2e | overfit best %.3e, < %.0e at step %llu  (%.0f s)%s",
           variant_name(v), log.front().data_loss, static_cast<unsigned long long>(kDeskEpochs), log.back().data_loss,
           ratio, best, kOverfitMse, static_cast<unsigned long long>(reached), seconds_since(tv), ok ? "" : "  <-- FAIL");
    worst_ratio = std::max(worst_ratio, ratio);
    worst_overfit = std::max(worst_overfit, best);
    r.pass = r.pass && ok;
    fit_cfg.learning_rate = kRefineLearningRate;
    fit_cfg.epochs = kOverfitSteps + kRefineSteps;
    train(fit, single, fit_cfg, fit_state);
    overfit_models.push_back({v, std::move(fit), single.sequences.front()});
  }
  const double secs = seconds_since(t0);
  r.pass = r.pass && secs < kDeskBudgetSeconds;
  r.summary = fmt("worst epoch-%llu/epoch-1 ratio %.2e (< %.2f), worst overfit MSE %.2e (< %.0e), %.0f s (< %.0f s)",
                  static_cast<unsigned long long>(kDeskEpochs), worst_ratio, kDeskRatio, worst_overfit, kOverfitMse,
                  secs, kDeskBudgetSeconds);
  report(r);
}

void generation_contract(const fs::path& dir) {
  Result r{5, "generation contract", true, ""};
  if (overfit_models.empty()) {
    r.pass = false;
    r.summary = "no overfit models available";
    report(r);
    return;
  }
  const FrameSpec spec{kDeskFrame, 16000};
  double worst = 0.0;
  bool shape_ok = true;
  for (auto& om : overfit_models) {
    const auto& seq = om.sequence;
    std::vector<Tensor<float>> seed(seq.frames.begin(), seq.frames.begin() + kDeskSteps);
    const auto one = generate(om.model, seed, 1, GenerationMode::Window, kDeskSteps);
    const auto& pred = one.back();
    const auto& truth = seq.frames[kDeskSteps];
    double err = 0.0, power = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = static_cast<double>(pred[i]) - truth[i];
      err += d * d;
      power += static_cast<double>(truth[i]) * truth[i];
    }
    const double rel = err / power;
    worst = std::max(worst, rel);

    const auto frames = generate(om.model, seed, kGeneratedFrames, GenerationMode::Window, kDeskSteps);
    const auto wav = (dir / (std::string("gen_") + variant_name(om.variant) + ".wav")).string();
    const auto rep = synthesize(to_features<float>(frames, spec), wav);
    const auto clip = read_wav(wav);
    bool finite = true;
    for (double s : clip.samples) finite = finite && std::isfinite(s);
    const bool ok = frames.size() == kDeskSteps + kGeneratedFrames &&
                    clip.samples.size() == frames.size() * kDeskFrame && rep.samples == clip.samples.size() &&
                    finite && rep.peak <= 1.0;
    shape_ok = shape_ok && ok;
    detail("%-12s next-frame relative MSE %.3e, %zu frames -> %zu samples, peak %.3f%s", variant_name(om.variant), rel,
           frames.size(), clip.samples.size(), rep.peak, rel < kNextFrameRelMse && ok ? "" : "  <-- FAIL");
  }
  r.pass = worst < kNextFrameRelMse && shape_ok;
  r.summary = fmt("worst relative MSE %.2e (< %.0e), lengths/samples/peak contract %s", worst, kNextFrameRelMse,
                  shape_ok ? "held" : "violated");
  report(r);
}

void full_scale_instantiation() {
  Result r{6, "full-scale instantiation", true, ""};
  const auto t0 = Clock::now();
  try {
    ArchitectureConfig a;
    a.variant = Variant::Base;
    a.frame_size = 4000;
    a.hidden = 2048;
    a.seed = 7;
    auto model = build_model<float>(a);
    std::size_t summed = 0;
    for (const auto& p : model.params()) summed += p.value.size();
    const std::size_t formula = parameter_count_formula(a);
    detail("parameters: formula %zu, tensor sum %zu", formula, summed);

    AudioClip clip{16000, {}};
    Rng rng(8);
    for (int i = 0; i < 41 * 4000; ++i) clip.samples.push_back(rng.uniform(-0.5, 0.5));
    std::vector<AudioClip> clips{clip};
    const auto data = build_dataset<float>(std::span<const AudioClip>(clips), FrameSpec{4000, 16000}, 40);
    TrainingConfig tc;  // defaults: T=40, dropout 0.5/0.2, L2 1e-4
    model.set_dropout(tc.dropout());
    Rng drop(9);
    auto loss = sequence_loss(model, data.sequences.front(), Mode::Train, drop, tc.l2_lambda);
    model.graph().backward(loss.total);
    RmsProp<float> opt(model.params());
    opt.step(model.params(), tc.optimizer());
    bool finite = std::isfinite(loss.value);
    for (const auto& p : model.params()) finite = finite && p.value.all_finite() && p.grad.all_finite();
    model.reset_state();

    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    const double peak = static_cast<double>(usage.ru_maxrss) * 1024.0;
    r.pass = formula == summed && formula == model.parameter_count() && finite && peak <= kMemoryBudgetBytes;
    r.summary = fmt("%zu parameters, T=40 forward+backward+update loss %.4e, peak RSS %.2f GB (<= 4 GB), %.0f s",
                    formula, loss.value, peak / (1024.0 * 1024 * 1024), seconds_since(t0));
  } catch (const std::exception& e) {
    r.pass = false;
    r.summary = std::string("exception: ") + e.what();
  }
  report(r);
}

// ---------------------------------------------------------------------------

int cli(const fs::path& dir, const std::string& args) {
  const auto log = (dir / "cli.log").string();
  return test::run_command(std::string(FGEN_CLI_PATH) + " " + args + " >> " + log + " 2>&1");
}

std::vector<char> bytes_of(const fs::path& p) { return test::read_bytes(p); }

void write_desk_wavs(const fs::path& dir) {
  const auto clips = desk_corpus();
  for (std::size_t i = 0; i < 4; ++i) write_wav((dir / ("clip" + std::to_string(i) + ".wav")).string(), clips[i]);
}

void reproducibility(const fs::path& root) {
  Result r{7, "reproducibility", true, ""};
  const auto dir = root / "repro";
  fs::create_directories(dir);
  write_desk_wavs(dir);
  std::string wavs;
  for (int i = 0; i < 4; ++i) wavs += " " + (dir / ("clip" + std::to_string(i) + ".wav")).string();
  const std::string common = "train --data" + wavs +
                             " --frame-size 64 --arch bilinear --hidden 16 --timesteps 10 --epochs 6 --batch 4"
                             " --seed 11 --checkpoint-epochs 3,6 --no-wall-clock --out ";
  bool ran = cli(dir, common + (dir / "a").string()) == 0 && cli(dir, common + (dir / "b").string()) == 0;
  ran = ran && cli(dir, common + (dir / "c").string() + " --resume " + (dir / "a" / "epoch_3.fgn").string()) == 0;
  if (!ran) {
    r.pass = false;
    r.summary = "a train run exited non-zero (see " + (dir / "cli.log").string() + ")";
    report(r);
    return;
  }
  const bool csv_same = bytes_of(dir / "a" / "loss.csv") == bytes_of(dir / "b" / "loss.csv");
  const bool ck_same = bytes_of(dir / "a" / "epoch_3.fgn") == bytes_of(dir / "b" / "epoch_3.fgn") &&
                       bytes_of(dir / "a" / "final.fgn") == bytes_of(dir / "b" / "final.fgn");

  const auto loaded = load_checkpoint((dir / "a" / "final.fgn").string());
  save_checkpoint((dir / "resaved.fgn").string(), loaded);
  const bool roundtrip = bytes_of(dir / "resaved.fgn") == bytes_of(dir / "a" / "final.fgn");

  const auto full = bytes_of(dir / "a" / "loss.csv");
  const auto resumed = bytes_of(dir / "c" / "loss.csv");
  const std::string full_s(full.begin(), full.end()), resumed_s(resumed.begin(), resumed.end());
  const std::string resumed_rows = resumed_s.substr(resumed_s.find('\n') + 1);
  const bool resume_log = !resumed_rows.empty() && full_s.ends_with(resumed_rows) &&
                          resumed_rows.rfind("4,", 0) == 0;
  const bool resume_ck = bytes_of(dir / "c" / "final.fgn") == bytes_of(dir / "a" / "final.fgn");

  r.pass = csv_same && ck_same && roundtrip && resume_log && resume_ck;
  r.summary = fmt("CSV identical %s, checkpoints identical %s, save/load bit-exact %s, resume log %s, resume weights %s",
                  csv_same ? "yes" : "no", ck_same ? "yes" : "no", roundtrip ? "yes" : "no",
                  resume_log ? "matches" : "differs", resume_ck ? "match" : "differ");
  report(r);
}

bool parse_pgm(const std::vector<char>& b, std::size_t& w, std::size_t& h) {
  std::string s(b.begin(), b.end());
  std::istringstream in(s);
  std::string magic;
  int maxval = 0;
  if (!(in >> magic >> w >> h >> maxval) || magic != "P5" || maxval != 255) return false;
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  return b.size() == offset + w * h;
}

bool parse_csv(const std::vector<char>& b, std::size_t expect_rows) {
  std::istringstream in(std::string(b.begin(), b.end()));
  std::string line;
  if (!std::getline(in, line) || line != "epoch,data_loss,total_loss,seconds") return false;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    if (cells.size() != 4 || cells[0] != static_cast<double>(++rows) || !std::isfinite(cells[1])) return false;
  }
  return rows == expect_rows;
}

void end_to_end(const fs::path& root) {
  Result r{8, "end-to-end CLI smoke", true, ""};
  const auto dir = root / "e2e";
  fs::create_directories(dir);
  write_desk_wavs(dir);
  std::string wavs;
  for (int i = 0; i < 4; ++i) wavs += " " + (dir / ("clip" + std::to_string(i) + ".wav")).string();
  std::vector<std::pair<std::string, int>> steps;
  steps.emplace_back("featurize", cli(dir, "featurize --in" + wavs + " --frame-size 64 --out " + (dir / "feat").string()));
  steps.emplace_back("train", cli(dir, "train --data " + (dir / "feat").string() +
                                           " --arch base --hidden 64 --timesteps 10 --epochs 20 --batch 4 --seed 1"
                                           " --out " + (dir / "run").string()));
  steps.emplace_back("generate", cli(dir, "generate --checkpoint " + (dir / "run" / "final.fgn").string() +
                                              " --seed-wav " + (dir / "clip3.wav").string() +
                                              " --frames 40 --mode window --seed 5 --out " +
                                              (dir / "gen.wav").string()));
  steps.emplace_back("spectrogram", cli(dir, "spectrogram --in " + (dir / "gen.wav").string() +
                                                 " --frame-size 64 --out " + (dir / "gen.pgm").string()));
  std::string codes;
  bool exits_ok = true;
  for (const auto& [name, code] : steps) {
    codes += name + "=" + std::to_string(code) + " ";
    exits_ok = exits_ok && code == 0;
  }
  bool wav_ok = false, csv_ok = false, pgm_ok = false;
  std::size_t samples = 0, w = 0, h = 0;
  try {
    const auto clip = read_wav((dir / "gen.wav").string());
    samples = clip.samples.size();
    wav_ok = samples == (10 + 40) * 64;
    csv_ok = parse_csv(bytes_of(dir / "run" / "loss.csv"), 20);
    pgm_ok = parse_pgm(bytes_of(dir / "gen.pgm"), w, h) && w == 50 && h == 33;
  } catch (const std::exception& e) {
    detail("parse error: %s", e.what());
  }
  r.pass = exits_ok && wav_ok && csv_ok && pgm_ok;
  r.summary = fmt("exit codes %s| WAV %zu samples %s, CSV %s, PGM %zux%zu %s", codes.c_str(), samples,
                  wav_ok ? "ok" : "bad", csv_ok ? "ok" : "bad", w, h, pgm_ok ? "ok" : "bad");
  report(r);
}

}  // namespace

int main() {
  const auto root = test::temp_dir("acceptance");
  std::printf("acceptance workspace: %s\n", root.string().c_str());
  const std::vector<std::function<void()>> criteria = {
      gradient_correctness,
      spectral_correctness,
      lstm_semantics,
      desk_scale_learning,
      [&] { generation_contract(root); },
      full_scale_instantiation,
      [&] { reproducibility(root); },
      [&] { end_to_end(root); },
  };
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report({static_cast<int>(i + 1), "uncaught exception", false, e.what()});
    }
  }
  std::size_t passed = 0;
  for (const auto& r : results) passed += r.pass ? 1 : 0;
  std::printf("%zu/%zu criteria passed\n", passed, results.size());
  return passed == results.size() ? 0 : 1;
}
