#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "support.hpp"
#include "ztric/ipfe.hpp"
#include "ztric/secure_inference.hpp"

using namespace ztric;

namespace {

const GroupParams& g160() { return named_group("test-160"); }

// Hand-built net: one fused layer with the given l x n weights, identity
// requant, then an n -> 2 output layer.
QuantizedModel tiny_model(const IntMatrix& w1, const IntMatrix& w2) {
  QuantizedLayer a;
  a.fused_relu = true;
  a.q_weights = w1;
  a.q_bias.assign(w1.cols(), 0);
  a.input = {1.0, 0};
  a.weight = {1.0, 0};
  a.output = {1.0, 0};
  a.requant = Requant::from_real(1.0);
  QuantizedLayer b;
  b.fused_relu = false;
  b.q_weights = w2;
  b.q_bias.assign(w2.cols(), 0);
  b.input = {1.0, 0};
  b.weight = {1.0, 0};
  b.output = {1.0, 0};
  return {{a, b}};
}

struct Deployed {
  KeyPair kp;
  std::vector<FunctionalKey> keys;
};

Deployed deploy(const QuantizedModel& qm, const GroupParams& G, std::uint64_t seed) {
  SeededEntropy rng(seed);
  Deployed d{setup(G, qm.layers.front().inputs(), rng), {}};
  d.keys = key_der(d.kp.msk, qm.layers.front().q_weights, G);
  return d;
}

}  // namespace

TEST(SecureInference, ToyInnerProduct) {
  const QuantizedModel qm = tiny_model(IntMatrix{{2}, {1}}, IntMatrix{{1, -1}});
  const Deployed d = deploy(qm, g160(), 1);
  EncryptedInferenceContext ctx(g160(), d.keys, split_for_xapp(qm));
  SeededEntropy rng(2);
  const std::vector<std::int64_t> x{1, 2};
  const Ciphertext ct = encrypt(d.kp.mpk, x, rng);
  EXPECT_EQ(ctx.inner_products(ct), std::vector<std::int64_t>{4});
  const InferenceResult r = evaluate_encrypted(ctx, ct);
  EXPECT_EQ(r.logits, (std::vector<std::int64_t>{4, -4}));
  EXPECT_EQ(r.cls, 0u);
}

TEST(SecureInference, ZeroPlaintextGivesBiasOnly) {
  const auto& qm = fixture::reference(10).quantized;
  const Deployed d = deploy(qm, g160(), 3);
  EncryptedInferenceContext ctx(g160(), d.keys, split_for_xapp(qm));
  SeededEntropy rng(4);
  const std::vector<std::int64_t> zero(50, 0);
  const auto inner = ctx.inner_products(encrypt(d.kp.mpk, zero, rng));
  EXPECT_TRUE(std::all_of(inner.begin(), inner.end(), [](std::int64_t v) { return v == 0; }));
}

TEST(SecureInference, CanonicalModelBitExact) {
  const auto& ref = fixture::reference(10);
  const auto& qm = ref.quantized;
  const Deployed d = deploy(qm, g160(), 5);
  EncryptedInferenceContext ctx(g160(), d.keys, split_for_xapp(qm));
  const auto& l1 = qm.layers.front();
  SeededEntropy rng(6);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto xq = quantize_vector(ref.val[i].readings, l1.input);
    const Ciphertext ct = encrypt(d.kp.mpk, xq, rng);
    const auto inner = ctx.inner_products(ct);
    for (std::size_t k = 0; k < l1.outputs(); ++k) ASSERT_EQ(inner[k], oracle::dot(xq, l1.q_weights.column(k)));
    const ForwardResult plain = quantized_forward(qm, xq);
    EXPECT_EQ(first_layer_activation(ctx.model().first, inner), requantize(l1, layer_accumulate(l1, xq)));
    const InferenceResult enc = evaluate_encrypted(ctx, ct);
    EXPECT_EQ(enc.logits, plain.logits);
    EXPECT_EQ(enc.cls, plain.cls);
  }
}

TEST(SecureInference, FirstSamplesClassified) {
  const auto& qm = fixture::reference(10).quantized;
  const Deployed d = deploy(qm, g160(), 7);
  EncryptedInferenceContext ctx(g160(), d.keys, split_for_xapp(qm));
  const Dataset data = generate_dataset(SynthConfig{}, 10);
  const auto jam = std::find_if(data.begin(), data.end(), [](const KpmWindow& w) { return w.jammer; });
  const auto ben = std::find_if(data.begin(), data.end(), [](const KpmWindow& w) { return !w.jammer; });
  ASSERT_NE(jam, data.end());
  ASSERT_NE(ben, data.end());
  SeededEntropy rng(8);
  auto classify = [&](const KpmWindow& w) {
    return evaluate_encrypted(ctx, encrypt(d.kp.mpk, quantize_vector(w.readings, qm.layers[0].input), rng)).cls;
  };
  EXPECT_EQ(classify(*jam), 1u);
  EXPECT_EQ(classify(*ben), 0u);
}

TEST(SecureInference, ContextHoldsNoFirstLayerWeights) {
  const auto& qm = fixture::reference(10).quantized;
  const XappModel xm = split_for_xapp(qm);
  EXPECT_EQ(xm.tail.size(), qm.layers.size() - 1);
  EXPECT_EQ(xm.tail.front(), qm.layers[1]);
  const auto j = xapp_io::to_json(xm);
  EXPECT_FALSE(j.at("first_layer").contains("q_weights"));
  EXPECT_EQ(xapp_io::from_json(j), xm);
  auto leaked = j;
  leaked["first_layer"]["q_weights"] = model_io::matrix_to_json(qm.layers[0].q_weights);
  EXPECT_THROW(xapp_io::from_json(leaked), ParseError);
}

TEST(SecureInference, RejectsInsecureKeySets) {
  const GroupParams& G = g160();
  // Counterexample: two unit columns reveal x_0 and x_1.
  const QuantizedModel basis = tiny_model(IntMatrix{{1, 0}, {0, 1}, {0, 0}}, IntMatrix{{1, 0}, {0, 1}});
  EXPECT_THROW(EncryptedInferenceContext(G, deploy(basis, G, 9).keys, split_for_xapp(basis)), ValidationError);
  // n = l violates the key budget even without a basis vector in the span.
  const QuantizedModel square = tiny_model(IntMatrix{{1, 2}, {3, 1}}, IntMatrix{{1, 0}, {0, 1}});
  EXPECT_THROW(EncryptedInferenceContext(G, deploy(square, G, 10).keys, split_for_xapp(square)), ValidationError);
  // Key count disagrees with the first layer width.
  const QuantizedModel ok = tiny_model(IntMatrix{{2}, {1}}, IntMatrix{{1, -1}});
  auto keys = deploy(ok, G, 11).keys;
  keys.push_back(keys.front());
  EXPECT_THROW(EncryptedInferenceContext(G, keys, split_for_xapp(ok)), ShapeError);
  EXPECT_THROW(EncryptedInferenceContext(G, {}, split_for_xapp(ok)), ShapeError);
}

TEST(SecureInference, CorruptedCiphertextNamesColumn) {
  const auto& qm = fixture::reference(5).quantized;
  const Deployed d = deploy(qm, g160(), 12);
  EncryptedInferenceContext ctx(g160(), d.keys, split_for_xapp(qm));
  SeededEntropy rng(13);
  Ciphertext ct = encrypt(d.kp.mpk, std::vector<std::int64_t>(25, 3), rng);
  ct.c0 = g160().mul(ct.c0, g160().g);
  try {
    evaluate_encrypted(ctx, ct);
    FAIL() << "corrupted ciphertext decrypted";
  } catch (const InferenceError& e) {
    EXPECT_EQ(e.column(), 0u);
  }
  ct.c.pop_back();
  EXPECT_THROW(evaluate_encrypted(ctx, ct), ShapeError);
}

TEST(SecureInference, ThreadedMatchesSerial) {
  const auto& ref = fixture::reference(10);
  const auto& qm = ref.quantized;
  const Deployed d = deploy(qm, g160(), 14);
  EncryptedInferenceContext serial(g160(), d.keys, split_for_xapp(qm));
  EncryptedInferenceContext par(g160(), d.keys, split_for_xapp(qm), 3);
  SeededEntropy rng(15);
  for (std::size_t i = 0; i < 20; ++i) {
    const Ciphertext ct = encrypt(d.kp.mpk, quantize_vector(ref.val[i].readings, qm.layers[0].input), rng);
    EXPECT_EQ(serial.inner_products(ct), par.inner_products(ct));
  }
}

TEST(SecureInference, EvalTimeGrowsWithWindowOnModp2048) {
  const GroupParams& G = named_group("modp2048");
  std::vector<double> eval_ms;
  for (std::size_t t : {5, 10, 20}) {
    const auto& qm = fixture::reference(t).quantized;
    const Deployed d = deploy(qm, G, 16 + t);
    EncryptedInferenceContext ctx(G, d.keys, split_for_xapp(qm));
    SeededEntropy rng(17);
    std::vector<std::int64_t> samples;
    for (int rep = 0; rep < 3; ++rep) {
      const Ciphertext ct = encrypt(d.kp.mpk, quantize_vector(fixture::reference(t).val[rep].readings,
                                                              qm.layers[0].input), rng);
      samples.push_back(evaluate_encrypted(ctx, ct).timings.total_us);
    }
    std::sort(samples.begin(), samples.end());
    eval_ms.push_back(samples[1] / 1000.0);
  }
  std::printf("modp2048 eval median ms: l=25 %.1f  l=50 %.1f  l=100 %.1f\n", eval_ms[0], eval_ms[1], eval_ms[2]);
  EXPECT_LT(eval_ms[0], eval_ms[1]);
  EXPECT_LT(eval_ms[1], eval_ms[2]);
}
