// ztric: key ceremony, data and model tooling, encrypted inference, pipeline runs.
//
// Exit codes: 0 ok, 1 internal error, 2 usage, 3 validation refused,
// 4 crypto error, 5 I/O or parse error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ztric/ztric.hpp"

using namespace ztric;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kRefused = 3, kCrypto = 4, kIo = 5 };

struct UsageError : Error {
  using Error::Error;
};

struct Global {
  bool json_out = false;
  std::uint64_t seed = 42;
  std::string group;
};

std::string default_group() {
  const char* env = std::getenv("ZTRIC_GROUP");
  return env && *env ? env : "modp2048";
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what);
  if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " not found: " + path);
}

const GroupParams& group_or_usage(const std::string& name) {
  try {
    return named_group(name);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
}

json report_to_json(const IssuanceReport& r) {
  json basis = {{"passed", r.basis.passed}, {"rank", r.basis.rank}, {"offending_basis_index", nullptr}};
  if (r.basis.offending_basis_index) basis["offending_basis_index"] = *r.basis.offending_basis_index;
  return {{"passed", r.passed},
          {"key_budget",
           {{"l", r.budget.l},
            {"n", r.budget.n},
            {"solution_space_bits", r.budget.solution_space_bits},
            {"passed", r.budget.passed}}},
          {"basis_check", basis}};
}

// First-layer matrix the KDC would issue keys for.
IntMatrix issuance_matrix(const ModelFile& mf) {
  if (mf.quantized) return mf.quantized->first_layer_weights();
  const auto& w = mf.float_model.layers.front().weights;
  return detail::quantize_weights(w, detail::symmetric_weight_params(w), true);
}

QuantizedModel require_quantized(const ModelFile& mf, const std::string& path) {
  if (!mf.quantized) throw UsageError(path + " holds no quantized model; run `ztric quantize` first");
  return *mf.quantized;
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stoul(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a comma-separated integer list: " + text);
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

void emit(const Global& g, const json& j, const std::string& human) {
  if (g.json_out) std::cout << j.dump(2) << '\n';
  else std::cout << human;
}

// ---------------------------------------------------------------- subcommands

struct KeygenOpts {
  std::size_t l = 0;
  std::string model, out_mpk = "mpk.json", out_msk = "msk.json", out_fk;
};

int cmd_keygen(const Global& g, const KeygenOpts& o) {
  const GroupParams& G = group_or_usage(g.group);
  std::optional<IntMatrix> W;
  std::size_t l = o.l;
  if (!o.model.empty()) {
    require_file(o.model, "model file");
    W = issuance_matrix(model_io::load(o.model));
    if (l && l != W->rows()) throw UsageError("--l disagrees with the model's input dim");
    l = W->rows();
    const IssuanceReport rep = validate_for_issuance(*W);
    if (!rep.passed) {
      emit(g, {{"issued", false}, {"report", report_to_json(rep)}},
           pipeline::IssuanceRefused::describe(rep) + "\n");
      return kRefused;
    }
  }
  if (l == 0) throw UsageError("give --l or --model");
  SeededEntropy rng(g.seed);
  KeyPair kp = setup(G, l, rng);
  model_io::write_json_file(o.out_mpk, envelope::to_json(kp.mpk));
  model_io::write_json_file(o.out_msk, envelope::to_json(kp.msk, G.name));
  json out = {{"group", G.name}, {"l", l}, {"mpk", o.out_mpk}, {"msk", o.out_msk}};
  std::string human = "group " + G.name + ", l = " + std::to_string(l) + "\nwrote " + o.out_mpk + ", " + o.out_msk + "\n";
  if (W) {
    const std::string fk_path = o.out_fk.empty() ? "fk.json" : o.out_fk;
    auto keys = key_der(kp.msk, *W, G);
    model_io::write_json_file(fk_path, envelope::to_json(keys, G.name));
    out["fk"] = fk_path;
    out["keys"] = keys.size();
    human += "wrote " + std::to_string(keys.size()) + " functional keys to " + fk_path + "\n";
  }
  emit(g, out, human);
  return kOk;
}

struct DataOpts {
  std::size_t t = 10, count = 1000;
  std::string out = "data.csv";
  double jammer_scale = 1.0;
};

int cmd_gen_data(const Global& g, const DataOpts& o) {
  SynthConfig sc;
  sc.t = o.t;
  sc.seed = g.seed;
  for (auto& v : sc.jammer_shift) v *= o.jammer_scale;
  try {
    check_config(sc);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  if (o.count == 0) throw UsageError("--count must be positive");
  const Dataset d = generate_dataset(sc, o.count);
  export_dataset(o.out, d);
  std::size_t jam = 0;
  for (const auto& w : d) jam += w.jammer;
  emit(g, {{"out", o.out}, {"count", d.size()}, {"jammer", jam}, {"input_dim", sc.input_dim()}},
       "wrote " + std::to_string(d.size()) + " windows (" + std::to_string(jam) + " jammer) to " + o.out + "\n");
  return kOk;
}

struct TrainOpts {
  std::string data, out = "model.json", dims;
  TrainConfig tc;
  bool quantize = true;
};

int cmd_train(const Global& g, TrainOpts o) {
  require_file(o.data, "dataset");
  const Dataset d = import_dataset(o.data);
  if (d.empty()) throw UsageError("dataset is empty: " + o.data);
  const std::size_t l = d.front().readings.size();
  std::vector<std::size_t> dims;
  if (!o.dims.empty()) dims = parse_list(o.dims);
  else if (l % kKpmCount == 0) dims = canonical_dims(l / kKpmCount);
  else throw UsageError("give --dims for input length " + std::to_string(l));
  o.tc.seed = g.seed;
  TrainResult tr = train_mlp(d, dims, o.tc);
  FloatModel fused = fuse_linear_relu(tr.model);
  json out = {{"out", o.out}, {"dims", dims}, {"parameters", parameter_count(tr.model)},
              {"train_accuracy", tr.train_accuracy}, {"val_accuracy", tr.val_accuracy},
              {"final_loss", tr.epoch_loss.back()}};
  std::ostringstream human;
  human << "trained " << parameter_count(tr.model) << " parameters: train accuracy " << tr.train_accuracy
        << ", val accuracy " << tr.val_accuracy << '\n';
  if (o.quantize) {
    auto [train, val] = split_dataset(d, o.tc.val_fraction, o.tc.seed);
    QuantizedModel qm = quantize_model(fused, to_calibration_set(train));
    const double qa = accuracy(qm, val.empty() ? train : val);
    out["quantized_val_accuracy"] = qa;
    human << "quantized val accuracy " << qa << '\n';
    model_io::save(o.out, fused, &qm);
  } else {
    model_io::save(o.out, fused);
  }
  human << "wrote " << o.out << '\n';
  emit(g, out, human.str());
  return kOk;
}

struct CalOpts {
  std::string model, data, out;
};

int cmd_calibrate(const Global& g, const CalOpts& o) {
  require_file(o.model, "model file");
  require_file(o.data, "calibration data");
  const ModelFile mf = model_io::load(o.model);
  const Dataset d = import_dataset(o.data);
  if (d.empty()) throw UsageError("calibration set is empty");
  const CalibrationReport rep = calibrate(mf.float_model, to_calibration_set(d));
  json layers = json::array();
  std::ostringstream human;
  human << "layer  in_scale      w_scale       out_scale     out_zp  range\n";
  for (std::size_t k = 0; k < rep.layers.size(); ++k) {
    const auto& l = rep.layers[k];
    layers.push_back({{"input", model_io::qp_to_json(l.input)},
                      {"weight", model_io::qp_to_json(l.weight)},
                      {"output", model_io::qp_to_json(l.output)},
                      {"output_min", l.output_min},
                      {"output_max", l.output_max},
                      {"degenerate", l.degenerate}});
    human << std::setw(5) << k << "  " << std::setw(12) << l.input.scale << "  " << std::setw(12) << l.weight.scale
          << "  " << std::setw(12) << l.output.scale << "  " << std::setw(6) << l.output.zero_point << "  ["
          << l.output_min << ", " << l.output_max << "]" << (l.degenerate ? "  degenerate" : "") << '\n';
  }
  json out = {{"layers", layers}, {"any_degenerate", rep.any_degenerate()}};
  if (!o.out.empty()) model_io::write_json_file(o.out, out);
  emit(g, out, human.str());
  return kOk;
}

struct QuantOpts {
  std::string model, data, out;
};

int cmd_quantize(const Global& g, const QuantOpts& o) {
  require_file(o.model, "model file");
  require_file(o.data, "calibration data");
  const ModelFile mf = model_io::load(o.model);
  const Dataset d = import_dataset(o.data);
  if (d.empty()) throw UsageError("calibration set is empty");
  FloatModel fused = mf.float_model.is_fused() ? mf.float_model : fuse_linear_relu(mf.float_model);
  const CalibrationSet cal = to_calibration_set(d);
  QuantizedModel qm = quantize_model(fused, cal);
  ForwardTrace trace;
  for (const auto& s : cal.samples) quantized_forward_float(qm, s, &trace);
  const double fa = accuracy(fused, d), qa = accuracy(qm, d);
  const std::string out = o.out.empty() ? o.model : o.out;
  model_io::save(out, fused, &qm);
  emit(g,
       {{"out", out}, {"float_accuracy", fa}, {"quantized_accuracy", qa}, {"calibration_clamps", trace.clamps_high},
        {"input_quant", model_io::qp_to_json(qm.input_params())}},
       "float accuracy " + std::to_string(fa) + ", quantized accuracy " + std::to_string(qa) + ", clamps on calibration set " +
           std::to_string(trace.clamps_high) + "\nwrote " + out + "\n");
  return kOk;
}

int cmd_validate(const Global& g, const std::string& model) {
  require_file(model, "model file");
  const IssuanceReport rep = validate_for_issuance(issuance_matrix(model_io::load(model)));
  std::string human = rep.passed ? "PASS: keys may be issued\n" : pipeline::IssuanceRefused::describe(rep) + "\n";
  human += "key budget: l = " + std::to_string(rep.budget.l) + ", n = " + std::to_string(rep.budget.n) +
           (rep.budget.passed ? ", solution space 2^" + std::to_string(rep.budget.solution_space_bits) : ", violated") + "\n";
  human += "basis check: rank " + std::to_string(rep.basis.rank) +
           (rep.basis.passed ? ", no standard basis vector in the column space\n"
                             : ", e_" + std::to_string(*rep.basis.offending_basis_index) + " in the column space\n");
  std::cout << (g.json_out ? report_to_json(rep).dump(2) + "\n" : human);
  return rep.passed ? kOk : kRefused;
}

struct EncOpts {
  std::string mpk, model, data, out = "ct.json";
};

int cmd_encrypt(const Global& g, const EncOpts& o) {
  require_file(o.mpk, "mpk file");
  require_file(o.model, "model file");
  require_file(o.data, "dataset");
  const MasterPublicKey mpk = envelope::mpk_from_json(model_io::read_json_file(o.mpk));
  const QuantizedModel qm = require_quantized(model_io::load(o.model), o.model);
  const Dataset d = import_dataset(o.data);
  SeededEntropy rng(g.seed);
  json cts = json::array();
  std::size_t clamps = 0;
  for (const auto& w : d) {
    auto xq = quantize_vector(w.readings, qm.input_params(), &clamps);
    cts.push_back(envelope::to_json(encrypt(mpk, xq, rng), mpk.group.name));
  }
  model_io::write_json_file(o.out, cts);
  emit(g, {{"out", o.out}, {"ciphertexts", cts.size()}, {"input_clamps", clamps}},
       "wrote " + std::to_string(cts.size()) + " ciphertexts to " + o.out + "\n");
  return kOk;
}

struct InferOpts {
  std::string model, data, ct, fk;
  bool encrypted = false, plaintext = false;
};

int cmd_infer(const Global& g, const InferOpts& o) {
  if (o.encrypted == o.plaintext) throw UsageError("choose exactly one of --encrypted and --plaintext");
  require_file(o.model, "model file");
  const QuantizedModel qm = require_quantized(model_io::load(o.model), o.model);
  std::vector<ForwardResult> results;
  if (o.plaintext) {
    require_file(o.data, "dataset");
    for (const auto& w : import_dataset(o.data)) results.push_back(quantized_forward_float(qm, w.readings));
  } else {
    std::vector<FunctionalKey> keys;
    std::vector<Ciphertext> cts;
    std::string group = g.group;
    if (!o.ct.empty()) {
      require_file(o.ct, "ciphertext file");
      require_file(o.fk, "functional key file");
      const json fkj = model_io::read_json_file(o.fk);
      keys = envelope::fk_set_from_json(fkj);
      for (const auto& c : model_io::read_json_file(o.ct)) cts.push_back(envelope::ct_from_json(c));
      if (!fkj.empty()) group = envelope::group_of(fkj.front());
    } else {
      // Whole ceremony in-process: keys, encryption, evaluation.
      require_file(o.data, "dataset");
      SeededEntropy rng(g.seed);
      pipeline::KdcIssue issue = pipeline::kdc_issue(qm, group_or_usage(group), rng);
      keys = issue.xapp.keys;
      for (const auto& w : import_dataset(o.data))
        cts.push_back(encrypt(issue.encryptor.mpk, quantize_vector(w.readings, qm.input_params()), rng));
    }
    EncryptedInferenceContext ctx(group_or_usage(group), keys, split_for_xapp(qm));
    for (const auto& ct : cts) {
      InferenceResult r = evaluate_encrypted(ctx, ct);
      results.push_back({r.logits, r.cls});
    }
  }
  json arr = json::array();
  std::ostringstream human;
  for (std::size_t i = 0; i < results.size(); ++i) {
    arr.push_back({{"window", i}, {"class", results[i].cls}, {"logits", results[i].logits}});
    human << i << ' ' << results[i].cls << '\n';
  }
  emit(g, {{"mode", o.encrypted ? "encrypted" : "plaintext"}, {"results", arr}}, human.str());
  return kOk;
}

ModelFile load_or_train(const std::string& path, std::size_t t, std::uint64_t seed) {
  if (!path.empty()) {
    require_file(path, "model file");
    return model_io::load(path);
  }
  ReferenceModel ref = build_reference_model(t, seed);
  return {ref.fused, ref.quantized};
}

struct PipeOpts {
  std::string config, csv, timings_csv;
};

pipeline::PipelineResult run_scenario(const Global& g, const pipeline::ScenarioConfig& cfg) {
  const ModelFile mf = load_or_train(cfg.model_path, cfg.t, g.seed);
  const QuantizedModel qm = require_quantized(mf, cfg.model_path);
  if (qm.input_dim() != cfg.t * cfg.m) throw UsageError("model input dim does not match t * m");
  pipeline::PipelineHooks hooks;
  if (!g.json_out) hooks.log = [](const std::string& s) { std::cerr << s << '\n'; };
  return pipeline::run_pipeline(cfg, [&] { return qm; }, [&] { return pipeline::scenario_windows(cfg); }, hooks);
}

json result_to_json(const pipeline::PipelineResult& r, const pipeline::TimingSummary& s) {
  json dec = json::array();
  for (const auto& d : r.decisions) dec.push_back({{"window_id", d.window_id}, {"jammer_present", d.jammer_present}});
  return {{"summary",
           {{"time_windows", s.t},
            {"input_shape", {s.input_dim, 1}},
            {"encryption_time_s", s.encryption_s},
            {"model_evaluation_time_s", s.eval_s},
            {"round_trip_time_s", s.rtt_s},
            {"transport_time_s", s.transport_s},
            {"queue_time_s", s.queue_s},
            {"control_return_time_s", s.control_return_s},
            {"windows", s.windows},
            {"drops", s.drops}}},
          {"decisions", dec},
          {"dropped", r.dropped},
          {"alarms", r.alarms},
          {"partial", r.partial},
          {"errors", r.errors},
          {"mpk_fingerprint", r.mpk_fingerprint}};
}

int cmd_pipeline(const Global& g, const PipeOpts& o) {
  require_file(o.config, "scenario config");
  pipeline::ScenarioConfig cfg = pipeline::scenario_from_json(model_io::read_json_file(o.config));
  if (!cfg.model_path.empty() && fs::path(cfg.model_path).is_relative())
    cfg.model_path = (fs::path(o.config).parent_path() / cfg.model_path).string();
  group_or_usage(cfg.group);
  const auto r = run_scenario(g, cfg);
  const auto s = pipeline::summarize(cfg.t, cfg.t * cfg.m, r);
  if (!o.csv.empty()) {
    std::ofstream f(o.csv);
    f << pipeline::kSummaryCsvHeader << '\n' << pipeline::summary_csv_row(s) << '\n';
    if (!f) throw IoError("cannot write " + o.csv);
  }
  if (!o.timings_csv.empty()) {
    std::ofstream f(o.timings_csv);
    f << pipeline::timings_csv(r.timings);
    if (!f) throw IoError("cannot write " + o.timings_csv);
  }
  if (g.json_out) {
    std::cout << result_to_json(r, s).dump(2) << '\n';
  } else {
    pipeline::print_summary_table(std::cout, {s});
    std::size_t alarms = 0;
    for (const auto& d : r.decisions) alarms += d.jammer_present;
    std::cout << r.decisions.size() << " decisions (" << alarms << " jammer), " << r.dropped.size() << " dropped\n";
    for (const auto& e : r.errors) std::cout << "error: " << e << '\n';
  }
  return r.partial ? kInternal : kOk;
}

struct BenchOpts {
  std::string windows = "5,10,20", csv, model_dir, mode = "threads";
  std::size_t count = 10;
  double interval_ms = 0;
};

int cmd_bench(const Global& g, const BenchOpts& o) {
  const auto ts = parse_list(o.windows);
  group_or_usage(g.group);
  if (o.count == 0) throw UsageError("--count must be positive");
  std::vector<pipeline::TimingSummary> rows;
  json results = json::array();
  bool partial = false;
  for (std::size_t t : ts) {
    if (t != 5 && t != 10 && t != 20) throw UsageError("time windows must be among 5, 10, 20");
    pipeline::ScenarioConfig cfg;
    cfg.group = g.group;
    cfg.t = t;
    cfg.windows = o.count;
    cfg.seed = g.seed;
    cfg.window_interval_ms = o.interval_ms;
    cfg.mode = o.mode == "processes" ? pipeline::RunMode::Processes : pipeline::RunMode::Threads;
    if (!o.model_dir.empty()) cfg.model_path = (fs::path(o.model_dir) / ("model_t" + std::to_string(t) + ".json")).string();
    const auto r = run_scenario(g, cfg);
    partial = partial || r.partial;
    rows.push_back(pipeline::summarize(t, t * kKpmCount, r));
    results.push_back(result_to_json(r, rows.back())["summary"]);
  }
  std::ostringstream csv;
  csv << pipeline::kSummaryCsvHeader << '\n';
  for (const auto& s : rows) csv << pipeline::summary_csv_row(s) << '\n';
  if (!o.csv.empty()) {
    std::ofstream f(o.csv);
    f << csv.str();
    if (!f) throw IoError("cannot write " + o.csv);
  }
  if (g.json_out) {
    std::cout << json{{"group", g.group}, {"rows", results}}.dump(2) << '\n';
  } else {
    pipeline::print_summary_table(std::cout, rows);
    std::cout << '\n' << csv.str();
  }
  return partial ? kInternal : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ztric: inner-product functional encryption for RIC xApp inference"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  g.group = default_group();
  app.add_flag("--json", g.json_out, "Structured JSON output");
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--group", g.group, "Group name (env ZTRIC_GROUP)")->capture_default_str();

  KeygenOpts kg;
  auto* keygen = app.add_subcommand("keygen", "Generate master keys, and functional keys for a model's first layer");
  keygen->add_option("--l", kg.l, "Vector length");
  keygen->add_option("--model", kg.model, "Model file; derives functional keys after validation");
  keygen->add_option("--out-mpk", kg.out_mpk)->capture_default_str();
  keygen->add_option("--out-msk", kg.out_msk)->capture_default_str();
  keygen->add_option("--out-fk", kg.out_fk, "Functional key set (default fk.json)");

  DataOpts dopt;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic KPM dataset (CSV)");
  gen->add_option("--t", dopt.t, "Time windows per sample")->capture_default_str();
  gen->add_option("--count", dopt.count)->capture_default_str();
  gen->add_option("--out", dopt.out)->capture_default_str();
  gen->add_option("--jammer-scale", dopt.jammer_scale, "Multiplier on the jammer shift")->capture_default_str();

  TrainOpts topt;
  auto* train = app.add_subcommand("train", "Train the float MLP and quantize it");
  train->add_option("--data", topt.data)->required();
  train->add_option("--out", topt.out)->capture_default_str();
  train->add_option("--dims", topt.dims, "Layer dims, e.g. 50,30,15,7,2 (default: canonical for t)");
  train->add_option("--epochs", topt.tc.epochs)->capture_default_str();
  train->add_option("--lr", topt.tc.learning_rate)->capture_default_str();
  train->add_option("--batch", topt.tc.batch_size)->capture_default_str();
  train->add_option("--val", topt.tc.val_fraction)->capture_default_str();
  train->add_flag("!--no-quantize", topt.quantize, "Store only the float model");

  CalOpts copt;
  auto* cal = app.add_subcommand("calibrate", "Report per-layer quantization parameters");
  cal->add_option("--model", copt.model)->required();
  cal->add_option("--data", copt.data)->required();
  cal->add_option("--out", copt.out);

  QuantOpts qopt;
  auto* quant = app.add_subcommand("quantize", "Fuse, calibrate and quantize a float model");
  quant->add_option("--model", qopt.model)->required();
  quant->add_option("--data", qopt.data, "Calibration set")->required();
  quant->add_option("--out", qopt.out, "Output model (default: overwrite --model)");

  std::string vmodel;
  auto* validate = app.add_subcommand("validate-weights", "Run the key-issuance checks on a model's first layer");
  validate->add_option("--model", vmodel)->required();

  EncOpts eopt;
  auto* enc = app.add_subcommand("encrypt", "Quantize and encrypt dataset windows");
  enc->add_option("--mpk", eopt.mpk)->required();
  enc->add_option("--model", eopt.model, "Model file providing input quantization")->required();
  enc->add_option("--data", eopt.data)->required();
  enc->add_option("--out", eopt.out)->capture_default_str();

  InferOpts iopt;
  auto* infer = app.add_subcommand("infer", "Classify windows on the encrypted or plaintext path");
  infer->add_option("--model", iopt.model)->required();
  infer->add_option("--data", iopt.data);
  infer->add_option("--ct", iopt.ct, "Ciphertext file from `encrypt`");
  infer->add_option("--fk", iopt.fk, "Functional key set from `keygen --model`");
  infer->add_flag("--encrypted", iopt.encrypted);
  infer->add_flag("--plaintext", iopt.plaintext);

  PipeOpts popt;
  auto* pipe = app.add_subcommand("pipeline", "Run a KDC / RAN / RIC scenario");
  pipe->add_option("--config", popt.config)->required();
  pipe->add_option("--csv", popt.csv, "Summary CSV");
  pipe->add_option("--timings-csv", popt.timings_csv, "Per-window timings");

  BenchOpts bopt;
  auto* bench = app.add_subcommand("bench", "Round-trip timing table across time-window configs");
  bench->add_option("--windows", bopt.windows, "Time-window configs")->capture_default_str();
  bench->add_option("--count", bopt.count, "Windows per config")->capture_default_str();
  bench->add_option("--interval-ms", bopt.interval_ms, "Pacing between windows")->capture_default_str();
  bench->add_option("--model-dir", bopt.model_dir, "Directory with model_t{5,10,20}.json");
  bench->add_option("--mode", bopt.mode)->check(CLI::IsMember({"threads", "processes"}))->capture_default_str();
  bench->add_option("--csv", bopt.csv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*keygen) return cmd_keygen(g, kg);
    if (*gen) return cmd_gen_data(g, dopt);
    if (*train) return cmd_train(g, topt);
    if (*cal) return cmd_calibrate(g, copt);
    if (*quant) return cmd_quantize(g, qopt);
    if (*validate) return cmd_validate(g, vmodel);
    if (*enc) return cmd_encrypt(g, eopt);
    if (*infer) return cmd_infer(g, iopt);
    if (*pipe) return cmd_pipeline(g, popt);
    if (*bench) return cmd_bench(g, bopt);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ValidationError& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return kRefused;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kIo;
  } catch (const BoundExceededError& e) {
    std::cerr << "crypto error: " << e.what() << '\n';
    return kCrypto;
  } catch (const InferenceError& e) {
    std::cerr << "crypto error: " << e.what() << '\n';
    return kCrypto;
  } catch (const RangeError& e) {
    std::cerr << "crypto error: " << e.what() << '\n';
    return kCrypto;
  } catch (const ParameterError& e) {
    std::cerr << "crypto error: " << e.what() << '\n';
    return kCrypto;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
