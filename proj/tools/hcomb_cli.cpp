// Copyright 2026 The hcomb Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// hcomb: command-line front end for the harmonic comb enhancement toolkit.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "hcomb/hcomb.hpp"

namespace {

using namespace hcomb;

struct PipelineFlags {
  std::size_t frame_size = 1536;
  std::size_t hop_size = 384;
  double f_min = 62.5;
  double f_max = 500.0;
  std::size_t f0_bins = 225;
  std::size_t order = 1;

  F0Grid grid() const { return F0Grid(f_min, f_max, f0_bins); }

  FrameConfig frame() const {
    FrameConfig cfg{frame_size, hop_size, order * grid().rounded_t_max()};
    cfg.validate();
    return cfg;
  }
};

void add_grid_flags(CLI::App* cmd, PipelineFlags& f) {
  cmd->add_option("--f-min", f.f_min, "Lowest F0 candidate in Hz")->capture_default_str();
  cmd->add_option("--f-max", f.f_max, "Highest F0 candidate in Hz")->capture_default_str();
  cmd->add_option("--f0-bins", f.f0_bins, "Number of voiced F0 candidates")->capture_default_str();
}

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f) {
  cmd->add_option("--frame-size", f.frame_size, "Frame size in samples")->capture_default_str();
  cmd->add_option("--hop-size", f.hop_size, "Hop size in samples")->capture_default_str();
  add_grid_flags(cmd, f);
  cmd->add_option("--order", f.order, "Comb filter order (taps per side)")->capture_default_str();
}

void add_estimator_flags(CLI::App* cmd, EstimatorConfig& e) {
  cmd->add_option("--yin-threshold", e.yin_threshold, "Absolute CMNDF threshold")->capture_default_str();
  cmd->add_option("--transition-width", e.transition_width, "Viterbi transition width in grid bins")
      ->capture_default_str();
  cmd->add_option("--switch-cost", e.switch_cost, "Viterbi voicing switch cost")->capture_default_str();
  cmd->add_option("--voicing-prior", e.voicing_prior, "Initial probability of a voiced frame")
      ->capture_default_str();
}

WavDepth parse_depth(const std::string& s) {
  if (s == "float32") return WavDepth::kFloat32;
  if (s == "pcm16") return WavDepth::kPcm16;
  if (s == "pcm24") return WavDepth::kPcm24;
  throw ConfigError("unknown sample format " + s);
}

void save_wav(const AudioBuffer& audio, const std::string& path, const std::string& depth) {
  const WavWriteReport report = write_wav(audio, path, parse_depth(depth));
  if (report.clipped) std::cerr << "warning: " << report.clipped << " samples clipped in " << path << "\n";
}

void print_value(std::ostream& os, const std::string& key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  os << key << "=" << buf << "\n";
}

std::size_t voiced_count(const F0Track& track, const F0Grid& grid) {
  std::size_t n = 0;
  for (const auto& f : track.frames) n += grid.is_voiced(f.grid_index);
  return n;
}

// ---- enhance

struct EnhanceArgs {
  std::string noisy, out, clean, gain, strength, f0, diag, bank, depth = "float32", pooling = "bin";
  bool rescale = false;
  double max_gain = 1.0;
};

int run_enhance(const EnhanceArgs& a, const PipelineFlags& flags, const EstimatorConfig& est) {
  const bool file_source = !a.gain.empty() || !a.strength.empty();
  if (!a.clean.empty() && file_source) {
    throw ConfigError("--clean and --gain/--strength are conflicting provider sources");
  }
  if (a.clean.empty() && !file_source) throw ConfigError("need --clean or both --gain and --strength");
  if (file_source && (a.gain.empty() || a.strength.empty())) {
    throw ConfigError("--gain and --strength must be given together");
  }
  if (a.pooling != "bin" && a.pooling != "band") throw ConfigError("--pooling must be bin or band");

  EnhanceConfig cfg;
  cfg.frame = flags.frame();
  cfg.blend.gamma = a.rescale ? kRescaleGamma : 1.0;
  cfg.estimator = est;
  cfg.f_min = flags.f_min;
  cfg.f_max = flags.f_max;
  cfg.f0_bins = flags.f0_bins;
  cfg.order = flags.order;
  cfg.max_gain = a.max_gain;

  std::optional<CombFilterBank> bank;
  if (!a.bank.empty()) bank = CombFilterBank::from_weights(flags.grid(), flags.order, read_matrix(a.bank));
  const Enhancer enhancer(cfg, std::move(bank));

  const AudioBuffer noisy = read_wav(a.noisy);
  std::optional<AudioBuffer> clean;
  if (!a.clean.empty()) clean = read_wav(a.clean);
  std::optional<F0Track> track;
  if (!a.f0.empty()) track = read_track_csv(a.f0, enhancer.grid());

  std::unique_ptr<GainProvider> gains;
  std::unique_ptr<StrengthProvider> strengths;
  if (clean) {
    gains = std::make_unique<OracleGain>();
    strengths = std::make_unique<OracleStrength>(a.pooling == "band" ? StrengthResolution::kBandPooled
                                                                    : StrengthResolution::kPerBin);
  } else {
    gains = std::make_unique<MatrixGain>(read_matrix(a.gain));
    strengths = std::make_unique<MatrixStrength>(read_matrix(a.strength));
  }

  const EnhanceResult r =
      enhancer.run(noisy, *gains, *strengths, track ? &*track : nullptr, clean ? &*clean : nullptr);
  save_wav(r.audio, a.out, a.depth);

  std::ostringstream report;
  report << "frames=" << r.track.size() << "\n";
  report << "voiced_frames=" << voiced_count(r.track, enhancer.grid()) << "\n";
  report << "latency_samples=" << r.latency_samples << "\n";
  print_value(report, "gamma", cfg.blend.gamma);
  if (clean) {
    const double before = snr(clean->samples, noisy.samples);
    const double after = snr(clean->samples, r.audio.samples);
    print_value(report, "snr_in_db", before);
    print_value(report, "snr_out_db", after);
    print_value(report, "snr_improvement_db", after - before);
    print_value(report, "sdr_db", sdr(clean->samples, r.audio.samples));
    const SeLoss loss = se_loss(enhancer.analyze(*clean), enhancer.analyze(r.audio), enhancer.analyze(r.gain_only));
    print_value(report, "se_loss", loss.total);
  }
  std::cout << report.str();

  if (!a.diag.empty()) {
    std::filesystem::create_directories(a.diag);
    const std::filesystem::path dir(a.diag);
    write_track_csv(r.track, (dir / "track.csv").string());
    write_matrix(r.strength.data, (dir / "strength.hcf").string());
    write_matrix(r.gain.data, (dir / "gain.hcf").string());
    if (clean) {
      std::ofstream m(dir / "metrics.txt");
      m << report.str();
      if (!m) throw IoError("cannot write " + (dir / "metrics.txt").string());
    }
  }
  return kExitOk;
}

// ---- f0

int run_f0(const std::string& in, const std::string& out, const std::string& posteriors,
           const PipelineFlags& flags, const EstimatorConfig& est) {
  const F0Grid grid = flags.grid();
  const F0Estimate e = estimate_track(read_wav(in), grid, est, flags.frame());
  write_track_csv(e.track, out);
  if (!posteriors.empty()) write_matrix(transpose(e.posteriors), posteriors);
  std::cout << "frames=" << e.track.size() << "\nvoiced_frames=" << voiced_count(e.track, grid) << "\n";
  return kExitOk;
}

// ---- labels / filterbank

int run_labels(const std::string& in, const std::string& out, const PipelineFlags& flags) {
  const F0Grid grid = flags.grid();
  const Matrix<double> labels = transpose(track_labels(grid, read_track_csv(in, grid)));
  write_matrix(labels, out);
  std::cout << "rows=" << labels.rows() << "\ncols=" << labels.cols() << "\n";
  return kExitOk;
}

int run_filterbank(const std::string& out, const PipelineFlags& flags) {
  const CombFilterBank bank = CombFilterBank::build(flags.grid(), flags.order);
  const Matrix<double> w = bank.weight_matrix();
  write_matrix(w, out);
  std::cout << "rows=" << w.rows() << "\ncols=" << w.cols() << "\n";
  return kExitOk;
}

// ---- verify

struct VerifyArgs {
  std::string input;
  std::uint64_t seed = 1;
  std::size_t tracks = 10;
  double seconds = 2.0;
  double tolerance = 1e-8;
};

// Random track of n_t frames; every grid index appears when n_t allows it.
F0Track random_track(const F0Grid& grid, std::size_t n_t, std::mt19937_64& rng) {
  std::vector<std::size_t> idx;
  std::uniform_int_distribution<std::size_t> pick(0, grid.unvoiced_index());
  for (std::size_t i = 0; i < n_t; ++i) idx.push_back(i < grid.label_size() ? i : pick(rng));
  std::shuffle(idx.begin(), idx.end(), rng);
  return track_from_indices(grid, idx);
}

int run_verify(const VerifyArgs& a, const PipelineFlags& flags) {
  if (a.tracks == 0) throw ConfigError("--tracks must be positive");
  const F0Grid grid = flags.grid();
  const FrameConfig frame = flags.frame();
  const CombFilterBank bank = CombFilterBank::build(grid, flags.order);
  std::mt19937_64 rng(a.seed);

  AudioBuffer audio;
  if (a.input.empty()) {
    if (!(a.seconds > 0.0)) throw ConfigError("--seconds must be positive");
    std::normal_distribution<double> noise(0.0, 0.1);
    audio = {std::vector<double>(std::size_t(a.seconds * kSampleRate)), kSampleRate};
    for (double& v : audio.samples) v = noise(rng);
  } else {
    audio = read_wav(a.input);
  }
  require_pipeline_input(audio);

  const ChunkedSignal<double> chunks = chunk_signal(audio, frame);
  double max_dev = 0.0;
  MacCounter ref_macs, inf_macs;
  for (std::size_t k = 0; k < a.tracks; ++k) {
    const F0Track track = random_track(grid, chunks.frame_count(), rng);
    const auto ref = filter_reference(bank, chunks, track, &ref_macs);
    const auto inf = filter_inference(bank, chunks, track, &inf_macs);
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
      max_dev = std::max(max_dev, std::abs(ref.data.flat()[i] - inf.data.flat()[i]));
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", max_dev);
  std::cout << "tracks=" << a.tracks << "\nframes=" << chunks.frame_count() << "\nreference_macs=" << ref_macs.macs
            << "\ninference_macs=" << inf_macs.macs << "\nmax_dev=" << buf << "\n";
  if (!(max_dev <= a.tolerance)) {
    std::cerr << "error: paths deviate by " << buf << " (tolerance " << a.tolerance << ")\n";
    return kExitVerification;
  }
  return kExitOk;
}

// ---- metrics

struct MetricsArgs {
  std::string clean, estimate, gains_only, csv;
  LossConfig loss;
};

int run_metrics(const MetricsArgs& a, const PipelineFlags& flags) {
  const AudioBuffer clean = read_wav(a.clean);
  const AudioBuffer est = read_wav(a.estimate);
  const AudioBuffer est0 = a.gains_only.empty() ? est : read_wav(a.gains_only);
  if (est.size() != clean.size() || est0.size() != clean.size()) {
    throw ShapeError("metrics: inputs differ in length");
  }
  const FrameConfig frame = flags.frame();
  const auto analyze = [&](const AudioBuffer& b) { return stft(frame_signal(b, frame), Window::kSqrtHann); };
  const SeLoss loss = se_loss(analyze(clean), analyze(est), analyze(est0), a.loss);

  const std::vector<std::pair<std::string, double>> values{
      {"sdr_db", sdr(clean.samples, est.samples)},
      {"snr_db", snr(clean.samples, est.samples)},
      {"se_loss", loss.total},
      {"se_magnitude_gain_only", loss.magnitude_gain_only},
      {"se_magnitude_output", loss.magnitude_output},
      {"se_complex", loss.complex_term},
  };
  for (const auto& [k, v] : values) print_value(std::cout, k, v);
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i].first;
    out << "\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.9g", values[i].second);
      out << (i ? "," : "") << buf;
    }
    out << "\n";
    if (!out) throw IoError("cannot write " + a.csv);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonic comb-filter speech enhancement toolkit (48 kHz)", "hcomb"};
  app.require_subcommand(1);

  PipelineFlags flags;
  EstimatorConfig est;

  EnhanceArgs enh;
  auto* enhance = app.add_subcommand("enhance", "Enhance a noisy WAV file");
  enhance->add_option("noisy", enh.noisy, "Noisy input WAV")->required();
  enhance->add_option("output", enh.out, "Enhanced output WAV")->required();
  enhance->add_option("--clean", enh.clean, "Clean reference; selects the oracle gain and strength providers");
  enhance->add_option("--gain", enh.gain, "Gain matrix G (HCF1, bins x frames)");
  enhance->add_option("--strength", enh.strength, "Strength matrix R (HCF1, bins x frames)");
  enhance->add_option("--f0", enh.f0, "F0 track CSV; the internal estimator is used otherwise");
  enhance->add_option("--bank", enh.bank, "Comb filter weights (HCF1, candidates x taps)");
  enhance->add_option("--diag", enh.diag, "Directory for track, R, G and metrics diagnostics");
  enhance->add_flag("--rescale", enh.rescale, "Rescale strength with gamma = 0.5 (default gamma = 1)");
  enhance->add_option("--pooling", enh.pooling, "Oracle strength resolution: bin or band")->capture_default_str();
  enhance->add_option("--max-gain", enh.max_gain, "Upper clamp for G")->capture_default_str();
  enhance->add_option("--format", enh.depth, "Output sample format: float32, pcm16 or pcm24")->capture_default_str();
  add_pipeline_flags(enhance, flags);
  add_estimator_flags(enhance, est);

  std::string f0_in, f0_out, f0_post;
  auto* f0 = app.add_subcommand("f0", "Estimate an F0 track");
  f0->add_option("input", f0_in, "Input WAV")->required();
  f0->add_option("output", f0_out, "Track CSV")->required();
  f0->add_option("--posteriors", f0_post, "Write frame posteriors (HCF1, frames x labels)");
  add_pipeline_flags(f0, flags);
  add_estimator_flags(f0, est);

  std::string labels_in, labels_out;
  auto* labels = app.add_subcommand("labels", "Gaussian F0 labels for a track");
  labels->add_option("track", labels_in, "Track CSV")->required();
  labels->add_option("output", labels_out, "Label matrix (HCF1, frames x labels)")->required();
  add_grid_flags(labels, flags);

  std::string bank_out;
  auto* filterbank = app.add_subcommand("filterbank", "Dump the comb filter weight matrix");
  filterbank->add_option("output", bank_out, "Weight matrix (HCF1, candidates x taps)")->required();
  add_grid_flags(filterbank, flags);
  filterbank->add_option("--order", flags.order, "Comb filter order (taps per side)")->capture_default_str();

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Check reference and low-cost filtering paths agree");
  verify->add_option("input", ver.input, "Input WAV; seeded noise when omitted");
  verify->add_option("--seed", ver.seed, "Random seed for noise and tracks")->capture_default_str();
  verify->add_option("--tracks", ver.tracks, "Number of random tracks")->capture_default_str();
  verify->add_option("--seconds", ver.seconds, "Length of the generated noise")->capture_default_str();
  verify->add_option("--tolerance", ver.tolerance, "Maximum absolute deviation")->capture_default_str();
  add_pipeline_flags(verify, flags);

  MetricsArgs met;
  auto* metrics = app.add_subcommand("metrics", "Loss and distortion metrics of an estimate");
  metrics->add_option("clean", met.clean, "Clean reference WAV")->required();
  metrics->add_option("estimate", met.estimate, "Enhanced WAV")->required();
  metrics->add_option("gains_only", met.gains_only, "Gain-only enhanced WAV; defaults to the estimate");
  metrics->add_option("--csv", met.csv, "Also write the values as CSV");
  metrics->add_option("--compression", met.loss.compression, "Magnitude compression exponent")
      ->capture_default_str();
  metrics->add_option("--complex-weight", met.loss.magnitude_weight, "Weight of the complex term")
      ->capture_default_str();
  metrics->add_option("--frame-size", flags.frame_size, "Frame size in samples")->capture_default_str();
  metrics->add_option("--hop-size", flags.hop_size, "Hop size in samples")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*enhance) return run_enhance(enh, flags, est);
    if (*f0) return run_f0(f0_in, f0_out, f0_post, flags, est);
    if (*labels) return run_labels(labels_in, labels_out, flags);
    if (*filterbank) return run_filterbank(bank_out, flags);
    if (*verify) return run_verify(ver, flags);
    if (*metrics) return run_metrics(met, flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
