#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "twinpurify/nn/adam.hpp"
#include "twinpurify/nn/checkpoint.hpp"
#include "twinpurify/nn/gradcheck.hpp"
#include "twinpurify/nn/mlp.hpp"

using namespace twinpurify;
using namespace twinpurify::nn;
using Catch::Matchers::ContainsSubstring;

namespace {

double sum_loss(const Mlp& net, const Tensor& x) { return net.forward(x).sum(); }

}  // namespace

TEST_CASE("forward examples", "[nn]") {
  Mlp id({.widths = {3, 3}}, "id");
  id.layers[0].weight.setIdentity();
  Tensor x(2, 3);
  x << 1, -2, 3, 0.5, 0, -7;
  CHECK(id.forward(x) == x);

  Mlp relu({.widths = {2, 2}, .output_activation = Activation::ReLU}, "relu");
  relu.layers[0].weight.setIdentity();
  Tensor v(1, 2);
  v << -1, 2;
  CHECK(relu.forward(v)(0, 0) == 0.0);
  CHECK(relu.forward(v)(0, 1) == 2.0);

  Mlp zero({.widths = {4, 2}}, "zero");
  zero.layers[0].bias << 0.25, -3;
  const Tensor out = zero.forward(tp_test::random_matrix(5, 4, 1));
  for (Eigen::Index i = 0; i < 5; ++i) {
    CHECK(out(i, 0) == 0.25);
    CHECK(out(i, 1) == -3.0);
  }

  CHECK_THROWS_WITH(zero.forward(Tensor::Zero(2, 3)), ContainsSubstring("input width 3"));
}

TEST_CASE("backward examples", "[nn]") {
  Mlp lin({.widths = {1, 1}}, "lin");
  lin.layers[0].weight(0, 0) = 2.0;
  Tensor x(1, 1);
  x << 3.0;
  ForwardCache cache;
  lin.forward(x, &cache);
  auto g = lin.zero_grad();
  const Tensor dx = lin.backward(cache, Tensor::Ones(1, 1), g);
  CHECK(g.layers[0].weight(0, 0) == 3.0);
  CHECK(g.layers[0].bias[0] == 1.0);
  CHECK(dx(0, 0) == 2.0);
  CHECK(lin.backward(cache, Tensor::Ones(1, 1), g, false).size() == 0);

  Mlp relu({.widths = {1, 1}, .output_activation = Activation::ReLU}, "relu");
  relu.layers[0].weight(0, 0) = 1.0;
  x << -4.0;
  relu.forward(x, &cache);
  auto gr = relu.zero_grad();
  relu.backward(cache, Tensor::Ones(1, 1), gr);
  CHECK(gr.layers[0].weight(0, 0) == 0.0);
  CHECK(gr.layers[0].bias[0] == 0.0);
}

TEST_CASE("analytic gradients match central differences", "[nn]") {
  const bool bn = GENERATE(false, true);
  Rng rng = make_stream(5);
  MLPSpec spec{.widths = {6, 5, 3}};
  if (bn) spec.batch_norm = {true, false};
  Mlp net = Mlp::initialized(spec, "net", rng);
  for (auto& l : net.layers) l.bias.setConstant(0.1);
  const Tensor x = tp_test::random_matrix(8, 6, 6);
  const Tensor w = tp_test::random_matrix(8, 3, 7);  // weights the output so the loss is not flat
  auto loss = [&] { return net.forward(x).cwiseProduct(w).sum(); };

  ForwardCache cache;
  net.forward(x, &cache);
  auto g = net.zero_grad();
  net.backward(cache, w, g);
  const auto report = finite_diff_check(loss, net.parameters(), copy_blocks(g.views("net")), {.step = 1e-6});
  CHECK(report.max_relative_error < 1e-6);
  CHECK(report.blocks.size() == (bn ? 6u : 4u));
}

TEST_CASE("input gradient matches central differences", "[nn]") {
  Rng rng = make_stream(8);
  Mlp net = Mlp::initialized({.widths = {4, 6, 2}}, "net", rng);
  Tensor x = tp_test::random_matrix(3, 4, 9);
  ForwardCache cache;
  net.forward(x, &cache);
  auto g = net.zero_grad();
  const Tensor dx = net.backward(cache, Tensor::Ones(3, 2), g);
  std::vector<ParamView> views{{"x", as_span(x)}};
  const std::vector<std::vector<double>> analytic{{dx.data(), dx.data() + dx.size()}};
  CHECK(finite_diff_check([&] { return sum_loss(net, x); }, views, analytic).max_relative_error < 1e-6);
}

TEST_CASE("gradient checker on a closed form", "[nn]") {
  std::vector<double> p{1.5, -2.0, 0.25};
  std::vector<ParamView> views{{"p", std::span<double>(p)}};
  auto f = [&] { return p[0] * p[0] + 3.0 * p[1] * p[1] + p[0] * p[2]; };
  const std::vector<std::vector<double>> g{{2 * p[0] + p[2], 6 * p[1], p[0]}};
  const auto r = finite_diff_check(f, views, g);
  CHECK(r.max_relative_error < 1e-8);
  CHECK(p == std::vector<double>{1.5, -2.0, 0.25});  // restored

  const std::vector<std::vector<double>> wrong{{0.0, 6 * p[1], p[0]}};
  CHECK(finite_diff_check(f, views, wrong).max_relative_error > 0.1);
  CHECK_THROWS_WITH(finite_diff_check(f, views, g, {.step = 0.0}), ContainsSubstring("step must be positive"));
}

TEST_CASE("adam", "[nn]") {
  std::vector<double> p{1.0, -2.0};
  std::vector<double> g{0.0, 0.0};
  AdamState s;
  adam_step(s, {{"p", std::span<double>(p)}}, {{"p", std::span<const double>(g)}});
  CHECK(p == std::vector<double>{1.0, -2.0});

  AdamState t;
  t.config.learning_rate = 0.01;
  g = {4.0, -0.5};
  adam_step(t, {{"p", std::span<double>(p)}}, {{"p", std::span<const double>(g)}});
  // The bias-corrected first step has magnitude lr * |g| / (|g| + eps).
  CHECK(p[0] == Catch::Approx(1.0 - 0.01).epsilon(1e-8));
  CHECK(p[1] == Catch::Approx(-2.0 + 0.01).epsilon(1e-8));

  auto run = [] {
    std::vector<double> q{0.3, 0.7, -1.1};
    AdamState st;
    for (int k = 0; k < 50; ++k) {
      std::vector<double> grad{2 * q[0], std::sin(q[1]), q[2] - 1.0};
      adam_step(st, {{"q", std::span<double>(q)}}, {{"q", std::span<const double>(grad)}});
    }
    return q;
  };
  CHECK(run() == run());

  std::vector<double> short_g{1.0};
  CHECK_THROWS_AS(adam_step(t, {{"p", std::span<double>(p)}}, {{"p", std::span<const double>(short_g)}}),
                  ValidationError);
}

TEST_CASE("checkpoint round trip", "[nn]") {
  Rng rng = make_stream(2);
  Mlp net = Mlp::initialized({.widths = {5, 4, 2}, .batch_norm = {true, false}}, "enc", rng);
  net.layers[0].running_mean.setConstant(0.3);
  AdamState st;
  st.config.learning_rate = 0.05;
  auto g = net.zero_grad();
  g.layers[0].weight.setConstant(0.2);
  adam_step(st, net.parameters(), g.views("enc"));
  standard_normal(rng);

  Checkpoint ck;
  store_mlp(ck, "enc", net);
  store_adam(ck, "opt", st);
  ck.put_text("rng", serialize_rng(rng));
  auto dir = tp_test::scratch_dir("ckpt");
  ck.save(dir / "a.ckpt");

  const auto back = Checkpoint::load(dir / "a.ckpt");
  const Mlp net2 = restore_mlp(back, "enc");
  CHECK(net2.spec == net.spec);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(net2.layers[l].weight == net.layers[l].weight);
    CHECK(net2.layers[l].bias == net.layers[l].bias);
    CHECK(net2.layers[l].running_mean == net.layers[l].running_mean);
  }
  const auto st2 = restore_adam(back, "opt");
  CHECK(st2.step == 1);
  CHECK(st2.first_moment[0] == st.first_moment[0]);
  CHECK(st2.config.learning_rate == 0.05);
  Rng rng2 = deserialize_rng(back.text("rng"));
  CHECK(rng2() == rng());

  back.save(dir / "b.ckpt");
  CHECK(tp_test::read_text(dir / "a.ckpt") == tp_test::read_text(dir / "b.ckpt"));

  tp_test::write_text(dir / "junk.ckpt", "not a checkpoint");
  CHECK_THROWS_AS(Checkpoint::load(dir / "junk.ckpt"), ValidationError);
  CHECK_THROWS_WITH(Checkpoint::load(dir / "nope.ckpt"), ContainsSubstring("nope.ckpt"));
}

TEST_CASE("non-finite values are reported with the layer", "[nn]") {
  Mlp net({.widths = {2, 3, 1}}, "enc");
  net.layers[1].weight(0, 0) = std::numeric_limits<double>::infinity();
  Tensor x = Tensor::Ones(2, 2);
  net.layers[0].weight.setOnes();
  CHECK_THROWS_AS(net.forward(x), NumericalError);
  CHECK_THROWS_WITH(net.forward(x), ContainsSubstring("layer 1"));
}
