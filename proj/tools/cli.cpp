// Copyright 2026 The bitedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>

#include "bitedit/bsq.hpp"
#include "bitedit/config.hpp"
#include "bitedit/editor.hpp"
#include "bitedit/grid.hpp"
#include "bitedit/inversion.hpp"
#include "bitedit/io.hpp"
#include "bitedit/kernel.hpp"
#include "bitedit/metrics.hpp"
#include "bitedit/predictor.hpp"
#include "bitedit/synth.hpp"

namespace bitedit::cli {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void require_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
}

void require_output(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw IoError("output directory '" + parent.string() + "' does not exist");
  }
}

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : RunConfig::load(path);
}

void save_image(const std::string& path, const Image& image) {
  if (fs::path(path).extension() == ".ppm") {
    save_ppm(path, image);
  } else {
    save_pgm(path, image);
  }
}

// Writes to the file when a path is given, otherwise to the fallback stream.
void emit(const std::string& path, const std::string& text, std::ostream& out,
          bool append = false) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, append ? std::ios::app : std::ios::trunc);
  if (!(f << text)) throw IoError("cannot write '" + path + "'");
}

// Flags override config keys.
struct KernelFlags {
  std::optional<std::string> kind;
  std::optional<double> tau1;
  std::optional<double> tau2;
  std::optional<double> alpha;

  void add(CLI::App* app) {
    app->add_option("--kernel", kind, "linear | gaussian");
    app->add_option("--tau1", tau1, "linear kernel inner distance");
    app->add_option("--tau2", tau2, "linear kernel outer distance");
    app->add_option("--alpha", alpha, "gaussian kernel width");
  }
  KernelSpec apply(KernelSpec spec) const {
    if (kind) spec.kind = parse_kernel_kind(*kind);
    if (tau1) spec.tau1 = *tau1;
    if (tau2) spec.tau2 = *tau2;
    if (alpha) spec.alpha = *alpha;
    return spec;
  }
};

PredictorParams load_model_params(const std::string& flag,
                                  const RunConfig& cfg) {
  const std::string path = flag.empty() ? cfg.predictor : flag;
  if (path.empty()) {
    throw std::invalid_argument(
        "missing predictor params: pass --predictor or set 'predictor'");
  }
  require_input(path);
  return load_predictor(path);
}

TokenPyramid tokenize_for(const PredictorParams& params, const Image& image,
                          const RunConfig& cfg) {
  if (cfg.codec.depth() != params.shape.depth) {
    throw std::invalid_argument("patch " + std::to_string(cfg.codec.patch) +
                                " does not match predictor depth " +
                                std::to_string(params.shape.depth));
  }
  const FeatureMap features = encode_image(image, cfg.codec);
  if (features.extent() != params.shape.schedule.full()) {
    throw std::invalid_argument("token grid " + to_string(features.extent()) +
                                " does not match predictor schedule " +
                                params.shape.schedule.str());
  }
  return tokenize(features, params.shape.schedule).pyramid;
}

std::vector<int> prompt_ids(int target, const RunConfig& cfg,
                            const PredictorParams& params) {
  return {target, cfg.instruction_id.value_or(params.shape.vocab - 1)};
}

// --- tokenize -------------------------------------------------------------

struct TokenizeArgs {
  std::string config, image, output, features;
};

void tokenize_cmd(const TokenizeArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.config);
  require_input(a.image);
  require_output(a.output);
  if (!a.features.empty()) require_output(a.features);
  const Image image = load_pgm(a.image);
  const ScaleSchedule schedule = cfg.schedule_for(image.extent());
  const FeatureMap features = encode_image(image, cfg.codec);
  const Tokenization tok = tokenize(features, schedule);
  save_pyramid(a.output, tok.pyramid);
  if (!a.features.empty()) save_feature_map(a.features, features);
  const Image decoded = decode_image(reconstruct(tok.pyramid), cfg.codec);
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    out << "scale " << k + 1 << ' ' << to_string(schedule[k])
        << " residual_energy " << num(tok.residual_energy[k]) << '\n';
  }
  out << "pixel_mse " << num(mse(image, decoded)) << '\n';
}

// --- reconstruct ----------------------------------------------------------

struct ReconstructArgs {
  std::string config, pyramid, output, reference, features;
};

void reconstruct_cmd(const ReconstructArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.config);
  require_input(a.pyramid);
  if (!a.reference.empty()) require_input(a.reference);
  require_output(a.output);
  if (!a.features.empty()) require_output(a.features);
  const TokenPyramid pyramid = load_pyramid(a.pyramid);
  if (pyramid.depth() != cfg.codec.depth()) {
    throw std::invalid_argument("pyramid depth " +
                                std::to_string(pyramid.depth()) +
                                " does not match patch " +
                                std::to_string(cfg.codec.patch));
  }
  const FeatureMap features = reconstruct(pyramid);
  const Image decoded = decode_image(features, cfg.codec);
  save_image(a.output, decoded);
  if (!a.features.empty()) save_feature_map(a.features, features);
  if (!a.reference.empty()) {
    out << "pixel_mse " << num(mse(load_pgm(a.reference), decoded)) << '\n';
  }
}

// --- kernel ---------------------------------------------------------------

struct KernelArgs {
  std::string config, mask, output, csv, features;
  KernelFlags kernel;
};

void kernel_cmd(const KernelArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.config);
  require_input(a.mask);
  require_output(a.output);
  if (!a.csv.empty()) require_output(a.csv);
  if (!a.features.empty()) require_output(a.features);
  const EditMask pixels = load_mask(a.mask);
  const Extent tokens = cfg.schedule_for(pixels.extent()).full();
  const EditMask token_mask = mask_to_token_grid(pixels, tokens, cfg.codec.patch);
  const KernelSpec spec = a.kernel.apply(cfg.kernel);
  const SmoothingKernel kernel = build_kernel(token_mask, spec);
  Image preview(kernel.height(), kernel.width());
  std::copy(kernel.values().begin(), kernel.values().end(),
            preview.values().begin());
  save_image(a.output, preview);
  if (!a.features.empty()) {
    save_feature_map(a.features,
                     FeatureMap(kernel.height(), kernel.width(), 1,
                                {kernel.values().begin(), kernel.values().end()}));
  }
  if (!a.csv.empty()) {
    const DistanceField field = manhattan_distance_field(token_mask);
    std::string text = "row,col,distance,weight\n";
    for (int i = 0; i < kernel.height(); ++i) {
      for (int j = 0; j < kernel.width(); ++j) {
        text += std::to_string(i) + ',' + std::to_string(j) + ',' +
                std::to_string(field(i, j)) + ',' + num(kernel(i, j)) + '\n';
      }
    }
    emit(a.csv, text, out);
  }
  out << "kernel " << to_string(spec.kind) << " tokens "
      << to_string(kernel.extent()) << " edit_cells "
      << token_mask.foreground_count() << '\n';
}

// --- train-toy ------------------------------------------------------------

struct TrainArgs {
  std::string config, output, trace;
  std::uint64_t seed = 0;
  int size = 64;
};

void train_cmd(const TrainArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.config);
  require_output(a.output);
  if (!a.trace.empty()) require_output(a.trace);
  if (a.size <= 0) throw std::invalid_argument("--size must be positive");
  const Extent extent{a.size, a.size};
  const PredictorShape shape = cfg.predictor_shape(extent);
  const int instruction = cfg.instruction();
  std::vector<int> content;
  for (int id = 0; id < shape.vocab; ++id) {
    if (id != instruction) content.push_back(id);
  }
  if (content.empty()) {
    throw std::invalid_argument("vocab leaves no prompt id for content");
  }
  const std::vector<Image> corpus =
      synthetic_corpus(cfg.train_samples, extent, a.seed);
  std::vector<TrainingSample> data;
  for (std::size_t n = 0; n < corpus.size(); ++n) {
    const FeatureMap features = encode_image(corpus[n], cfg.codec);
    data.push_back({{content[n % content.size()], instruction},
                    tokenize(features, shape.schedule).pyramid});
  }
  TrainingConfig training = cfg.training;
  training.seed = a.seed;
  const TrainingOutcome outcome = train_predictor(data, shape, training);
  save_predictor(a.output, outcome.params);
  if (!a.trace.empty()) {
    std::string text = "iteration,loss\n";
    for (std::size_t i = 0; i < outcome.loss_trace.size(); ++i) {
      text += std::to_string(i) + ',' + num(outcome.loss_trace[i]) + '\n';
    }
    emit(a.trace, text, out);
  }
  out << "samples " << data.size() << " iterations "
      << outcome.loss_trace.size() << " final_loss "
      << num(outcome.final_loss) << " bit_accuracy "
      << num(outcome.final_bit_accuracy) << '\n';
}

// --- invert ---------------------------------------------------------------

struct InvertArgs {
  std::string config, image, predictor, output, trace;
  int prompt_id = 0;
  std::uint64_t seed = 0;
};

void invert_cmd(const InvertArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.config);
  require_input(a.image);
  require_output(a.output);
  if (!a.trace.empty()) require_output(a.trace);
  const PredictorParams params = load_model_params(a.predictor, cfg);
  const TokenPyramid source = tokenize_for(params, load_pgm(a.image), cfg);
  InversionConfig inversion = cfg.inversion;
  inversion.seed = a.seed;
  const std::vector<int> ids = prompt_ids(a.prompt_id, cfg, params);
  const InversionResult result = invert(params, ids, source, inversion);
  save_sidecar(a.output, params.shape, result.adaptation());
  std::string text = "iteration,stage,ce_loss,kl_loss,bit_accuracy\n";
  for (const InversionRecord& r : result.records()) {
    text += std::to_string(r.iteration) + ',' + std::to_string(r.stage) + ',' +
            num(r.ce) + ',' + num(r.kl) + ',' + num(r.bit_accuracy) + '\n';
  }
  emit(a.trace, text, out);
}

// --- edit -----------------------------------------------------------------

struct EditArgs {
  std::string config, image, mask, predictor, sidecar, output, dump, tokens;
  std::optional<std::string> mode, sampling;
  KernelFlags kernel;
  int prompt_id = 0;
  std::uint64_t seed = 0;
};

void edit_cmd(const EditArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.config);
  require_input(a.image);
  require_input(a.mask);
  if (!a.sidecar.empty()) require_input(a.sidecar);
  require_output(a.output);
  if (!a.dump.empty()) require_output(a.dump);
  if (!a.tokens.empty()) require_output(a.tokens);
  const PredictorParams params = load_model_params(a.predictor, cfg);

  EditRequest request;
  request.source = load_pgm(a.image);
  request.pixel_mask = load_mask(a.mask);
  request.prompt_ids = prompt_ids(a.prompt_id, cfg, params);
  request.kernel = a.kernel.apply(cfg.kernel);
  request.mode = a.mode ? parse_edit_mode(*a.mode) : cfg.mode;
  request.sampling = {a.sampling ? parse_sampling_mode(*a.sampling) : cfg.sampling,
                      a.seed};
  request.codec = cfg.codec;
  const Adaptation adaptation =
      a.sidecar.empty() ? Adaptation{} : load_sidecar(a.sidecar, params.shape);

  const EditSession session = make_session(params, request, adaptation);
  const EditResult result = run_edit(session);
  save_image(a.output, result.image);
  if (!a.dump.empty()) save_edited(a.dump, result.edited);
  if (!a.tokens.empty()) save_pyramid(a.tokens, result.target);

  std::size_t changed = 0;
  for (std::size_t k = 0; k < result.target.size(); ++k) {
    const auto src = session.source[k].words();
    const auto tgt = result.target[k].words();
    for (std::size_t n = 0; n < src.size(); ++n) changed += src[n] != tgt[n];
  }
  out << "mode " << to_string(session.mode) << " scales "
      << session.source.size() << " predicted_tokens_differing " << changed
      << '\n';
}

// --- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string a, b, mask, id, output;
  bool append = false;
};

void eval_cmd(const EvalArgs& a, std::ostream& out) {
  require_input(a.a);
  require_input(a.b);
  if (!a.mask.empty()) require_input(a.mask);
  if (!a.output.empty()) require_output(a.output);
  const Image first = load_pgm(a.a);
  const Image second = load_pgm(a.b);
  if (first.extent() != second.extent()) {
    throw std::invalid_argument("image dims differ: " +
                                to_string(first.extent()) + " vs " +
                                to_string(second.extent()));
  }
  // The background is everything outside the edit mask.
  EditMask background(first.height(), first.width(), 1);
  if (!a.mask.empty()) {
    const EditMask edit = load_mask(a.mask);
    if (edit.extent() != first.extent()) {
      throw std::invalid_argument("mask dims " + to_string(edit.extent()) +
                                  " differ from image " +
                                  to_string(first.extent()));
    }
    background = edit.complement();
  }
  const std::string id =
      a.id.empty() ? fs::path(a.b).stem().string() : a.id;
  std::string text;
  if (!a.append) text = "image_id,region,psnr_db,mse,ssim\n";
  for (const MetricReport& r :
       {evaluate(first, second), evaluate(first, second, &background, "background")}) {
    text += id + ',' + r.region + ',' + num(r.psnr) + ',' + num(r.mse) + ',' +
            num(r.ssim) + '\n';
  }
  emit(a.output, text, out, a.append);
}

// --- gradcheck ------------------------------------------------------------

struct GradcheckArgs {
  std::uint64_t seed = 0;
  GradientCheckOptions options;
  int learnable = 3;
};

bool gradcheck_cmd(const GradcheckArgs& a, std::ostream& out) {
  if (a.learnable < 0) throw std::invalid_argument("--learnable must be >= 0");
  std::mt19937_64 rng(a.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](auto& t, double scale) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = scale * normal(rng);
  };
  const PredictorShape shape{8, 4, 5, ScaleSchedule::parse("1x1,2x2")};
  PredictorParams params = PredictorParams::init(shape, a.seed);
  fill(params.head, 0.5);
  fill(params.head_bias, 0.3);
  fill(params.b_in, 0.3);
  fill(params.b1, 0.3);
  fill(params.b2, 0.3);
  // Non-zero B so the adapter path and the KL term carry gradient.
  LowRankAdapter adapter = LowRankAdapter::init(shape, 2, a.seed + 1);
  fill(adapter.b1, 0.3);
  fill(adapter.b2, 0.3);
  params.adapter = adapter;
  Matrix learnable(a.learnable, shape.width);
  fill(learnable, 1.0);
  const std::vector<int> ids{1, 4};
  const PromptEmbedding prompt = PromptEmbedding::from_ids(params, ids, learnable);
  std::vector<TokenMap> maps;
  for (const Extent& e : shape.schedule.scales()) {
    TokenMap t(e, shape.depth);
    for (TokenWord& w : t.words()) w = rng() & 0xF;
    maps.push_back(std::move(t));
  }
  const TokenPyramid source(shape.schedule, std::move(maps));
  const GradientCheckReport r = check_gradients(params, prompt, source, a.options);
  out << "checked " << r.checked << " max_relative_error "
      << num(r.max_relative_error) << " worst " << r.worst << ' '
      << (r.passed ? "PASS" : "FAIL") << '\n';
  return r.passed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Bitwise multi-scale token editing toolkit"};
  app.name("bitedit");
  app.require_subcommand(1);

  TokenizeArgs tk;
  auto* tokenize_app = app.add_subcommand("tokenize", "Encode and tokenize a PGM image");
  tokenize_app->add_option("image", tk.image, "source PGM")->required();
  tokenize_app->add_option("-o,--output", tk.output, "BQTK token pyramid")->required();
  tokenize_app->add_option("--features", tk.features, "BQFM dump of the encoder output");
  tokenize_app->add_option("-c,--config", tk.config, "key = value config");

  ReconstructArgs rc;
  auto* reconstruct_app = app.add_subcommand("reconstruct", "Decode a token pyramid");
  reconstruct_app->add_option("pyramid", rc.pyramid, "BQTK token pyramid")->required();
  reconstruct_app->add_option("-o,--output", rc.output, "PGM or PPM image")->required();
  reconstruct_app->add_option("--reference", rc.reference, "PGM to report pixel MSE against");
  reconstruct_app->add_option("--features", rc.features, "BQFM dump of the reconstruction");
  reconstruct_app->add_option("-c,--config", rc.config, "key = value config");

  KernelArgs kn;
  auto* kernel_app = app.add_subcommand("kernel", "Preview the smoothing kernel of a mask");
  kernel_app->add_option("mask", kn.mask, "mask PGM (dark = edit region)")->required();
  kernel_app->add_option("-o,--output", kn.output, "kernel image at token resolution")->required();
  kernel_app->add_option("--csv", kn.csv, "per-cell distance and weight");
  kernel_app->add_option("--features", kn.features, "BQFM depth-1 dump of the kernel");
  kernel_app->add_option("-c,--config", kn.config, "key = value config");
  kn.kernel.add(kernel_app);

  TrainArgs tr;
  auto* train_app = app.add_subcommand("train-toy", "Train the toy predictor on synthetic images");
  train_app->add_option("-o,--output", tr.output, "BQPM predictor")->required();
  train_app->add_option("--seed", tr.seed, "corpus and init seed")->required();
  train_app->add_option("--size", tr.size, "image side in pixels")->capture_default_str();
  train_app->add_option("--trace", tr.trace, "CSV loss trace");
  train_app->add_option("-c,--config", tr.config, "key = value config");

  InvertArgs iv;
  auto* invert_app = app.add_subcommand("invert", "Fit learnable prompt rows and LoRA factors");
  invert_app->add_option("image", iv.image, "source PGM")->required();
  invert_app->add_option("--prompt-id", iv.prompt_id, "source prompt id")->required();
  invert_app->add_option("--predictor", iv.predictor, "BQPM predictor");
  invert_app->add_option("--seed", iv.seed, "initialization seed")->required();
  invert_app->add_option("-o,--output", iv.output, "BQPM sidecar")->required();
  invert_app->add_option("--trace", iv.trace, "CSV loss trace (default stdout)");
  invert_app->add_option("-c,--config", iv.config, "key = value config");

  EditArgs ed;
  auto* edit_app = app.add_subcommand("edit", "Edit the masked region of an image");
  edit_app->add_option("image", ed.image, "source PGM")->required();
  edit_app->add_option("--mask", ed.mask, "mask PGM (dark = edit region)")->required();
  edit_app->add_option("--prompt-id", ed.prompt_id, "target prompt id")->required();
  edit_app->add_option("--predictor", ed.predictor, "BQPM predictor");
  edit_app->add_option("--sidecar", ed.sidecar, "BQPM sidecar from invert");
  edit_app->add_option("--seed", ed.seed, "sampling seed")->required();
  edit_app->add_option("-o,--output", ed.output, "edited PGM or PPM")->required();
  edit_app->add_option("--dump", ed.dump, "BQEP dump of the edited pyramid");
  edit_app->add_option("--tokens", ed.tokens, "BQTK dump of the predicted tokens");
  edit_app->add_option("--mode", ed.mode, "ar | nar");
  edit_app->add_option("--sampling", ed.sampling, "greedy | bernoulli");
  edit_app->add_option("-c,--config", ed.config, "key = value config");
  ed.kernel.add(edit_app);

  EvalArgs ev;
  auto* eval_app = app.add_subcommand("eval", "PSNR, MSE and SSIM of two images");
  eval_app->add_option("a", ev.a, "reference PGM")->required();
  eval_app->add_option("b", ev.b, "test PGM")->required();
  eval_app->add_option("--mask", ev.mask, "edit mask; background is its complement");
  eval_app->add_option("--id", ev.id, "image_id column (default: stem of b)");
  eval_app->add_option("-o,--output", ev.output, "CSV file (default stdout)");
  eval_app->add_flag("--append", ev.append, "append rows without a header");

  GradcheckArgs gc;
  auto* gradcheck_app = app.add_subcommand("gradcheck", "Finite-difference check of the inversion gradients");
  gradcheck_app->add_option("--seed", gc.seed, "instance seed")->required();
  gradcheck_app->add_option("--step", gc.options.step, "central difference step")->capture_default_str();
  gradcheck_app->add_option("--tolerance", gc.options.tolerance, "max relative error")->capture_default_str();
  gradcheck_app->add_option("--kl-weight", gc.options.kl_weight, "KL weight")->capture_default_str();
  gradcheck_app->add_option("--learnable", gc.learnable, "learnable prompt rows")->capture_default_str();
  gradcheck_app->add_flag("--base", gc.options.base, "also check base tensors");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*tokenize_app) tokenize_cmd(tk, out);
    if (*reconstruct_app) reconstruct_cmd(rc, out);
    if (*kernel_app) kernel_cmd(kn, out);
    if (*train_app) train_cmd(tr, out);
    if (*invert_app) invert_cmd(iv, out);
    if (*edit_app) edit_cmd(ed, out);
    if (*eval_app) eval_cmd(ev, out);
    if (*gradcheck_app && !gradcheck_cmd(gc, out)) return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace bitedit::cli
