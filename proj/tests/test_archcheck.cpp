#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "servokit/archcheck.hpp"

using namespace servokit;
using Catch::Matchers::WithinRel;

TEST_CASE("shape propagation per layer kind") {
  LayerSpec pool;
  pool.kind = LayerKind::pool2d;
  pool.kernel_h = pool.kernel_w = 2;
  pool.stride_h = pool.stride_w = 2;
  CHECK(propagate_shape(pool, {{45, 80, 256}}) == ShapeTensor{{22, 40, 256}});
  CHECK(propagate_shape(pool, {{180, 320, 64}}) == ShapeTensor{{90, 160, 64}});

  LayerSpec conv;
  conv.kind = LayerKind::conv2d;
  conv.filters = 512;
  CHECK(propagate_shape(conv, {{22, 40, 256}}) == ShapeTensor{{22, 40, 512}});

  LayerSpec flat;
  flat.kind = LayerKind::flatten;
  CHECK(propagate_shape(flat, {{5, 10, 512}}) == ShapeTensor{{25600, 1}});

  LayerSpec dense;
  dense.kind = LayerKind::dense;
  dense.filters = 8;
  CHECK(propagate_shape(dense, {{25600, 1}}) == ShapeTensor{{8, 1}});
}

TEST_CASE("shape propagation rejects bad ranks and strides") {
  LayerSpec conv;
  conv.kind = LayerKind::conv2d;
  conv.filters = 64;
  CHECK_THROWS_AS(propagate_shape(conv, {{25600, 1}}), ContractError);
  conv.stride_h = 2;
  CHECK_THROWS_AS(propagate_shape(conv, {{8, 8, 3}}), ContractError);

  LayerSpec pool;
  pool.kind = LayerKind::pool2d;
  pool.stride_h = pool.stride_w = 2;
  CHECK_THROWS_AS(propagate_shape(pool, {{1, 4, 8}}), ContractError);

  LayerSpec flat;
  flat.kind = LayerKind::flatten;
  CHECK_THROWS_AS(propagate_shape(flat, {{10, 1}}), ContractError);

  LayerSpec dense;
  dense.kind = LayerKind::dense;
  dense.filters = 8;
  CHECK_THROWS_AS(propagate_shape(dense, {{5, 10, 512}}), ContractError);
}

TEST_CASE("the modified network matches every published row") {
  const auto arch = build_modified_vgg19();
  REQUIRE(arch.size() == 23);
  const auto expected = expected_shape_table();
  REQUIRE(expected.size() == 23);
  const VerifyReport report = verify_table(arch, expected);
  CHECK(report.ok);
  CHECK(report.first_mismatch == -1);
  REQUIRE(report.rows.size() == 23);
  for (const auto& row : report.rows) CHECK(row.matches);
  CHECK(report.rows.back().kind == LayerKind::dense);
  CHECK(report.rows.back().output == ShapeTensor{{8, 1}});
}

TEST_CASE("the dense head holds exactly 204808 parameters") {
  const VerifyReport report =
      verify_table(build_modified_vgg19(), expected_shape_table());
  CHECK(report.dense_head_params == 204808);
  // Conv-stack total for the 16-layer feature extractor; a frozen,
  // independently known figure that pins the kernel bookkeeping.
  CHECK(report.frozen_base_params == 20024384);
}

TEST_CASE("average and max pooling give identical shape tables") {
  const auto avg = verify_table(build_modified_vgg19(PoolMode::avg),
                                expected_shape_table());
  const auto max = verify_table(build_modified_vgg19(PoolMode::max),
                                expected_shape_table());
  CHECK(avg.ok);
  CHECK(max.ok);
  REQUIRE(avg.rows.size() == max.rows.size());
  for (std::size_t i = 0; i < avg.rows.size(); ++i) {
    CHECK(avg.rows[i].input == max.rows[i].input);
    CHECK(avg.rows[i].output == max.rows[i].output);
    CHECK(avg.rows[i].params == max.rows[i].params);
  }
}

TEST_CASE("a planted table defect is pinpointed") {
  auto expected = expected_shape_table();
  expected[10].output.dims[0] = 23;  // pool rounding slip
  const VerifyReport report = verify_table(build_modified_vgg19(), expected);
  CHECK_FALSE(report.ok);
  CHECK(report.first_mismatch == 10);
  CHECK(report.message.find("layer 10") != std::string::npos);
  CHECK_FALSE(report.rows[10].matches);
  CHECK(report.rows[11].matches);
}

TEST_CASE("a planted architecture defect is pinpointed") {
  auto arch = build_modified_vgg19();
  arch[6].filters = 255;
  const VerifyReport report = verify_table(arch, expected_shape_table());
  CHECK_FALSE(report.ok);
  CHECK(report.first_mismatch == 6);
  auto truncated = build_modified_vgg19();
  truncated.pop_back();
  CHECK_FALSE(verify_table(truncated, expected_shape_table()).ok);
}

TEST_CASE("shape propagation composes across the whole stack") {
  const auto arch = build_modified_vgg19();
  ShapeTensor shape = kNetworkInput;
  int convs = 0, pools = 0;
  for (const auto& layer : arch) {
    shape = propagate_shape(layer, shape);
    convs += layer.kind == LayerKind::conv2d;
    pools += layer.kind == LayerKind::pool2d;
  }
  CHECK(convs == 16);
  CHECK(pools == 5);
  CHECK(shape == ShapeTensor{{8, 1}});
}

TEST_CASE("architecture CSV carries one row per layer") {
  const std::string csv = arch_to_csv(build_modified_vgg19());
  CHECK(csv.rfind("index,name,kind,out_shape,params\n", 0) == 0);
  std::size_t rows = 0;
  for (const char ch : csv) rows += ch == '\n';
  CHECK(rows == 24);
  CHECK(csv.find("dense,dense,[8,1],204808") != std::string::npos);
  CHECK(csv.find("flatten,flatten,[25600,1],0") != std::string::npos);
}

TEST_CASE("step decay matches closed-form values") {
  const LrSchedule schedule;
  CHECK(lr_at(schedule, 0) == 1e-5);
  CHECK(lr_at(schedule, 2499) == 1e-5);
  CHECK_THAT(lr_at(schedule, 2500), WithinRel(9.5e-6, 1e-12));
  CHECK_THAT(lr_at(schedule, 25000),
             WithinRel(1e-5 * std::pow(0.95, 10.0), 1e-12));
  CHECK_THAT(lr_at(schedule, 100000),
             WithinRel(1e-5 * std::pow(0.95, 40.0), 1e-12));
}

TEST_CASE("step decay is piecewise constant and non-increasing") {
  const LrSchedule schedule;
  CHECK(lr_at(schedule, 2500) == lr_at(schedule, 4999));
  CHECK(lr_at(schedule, 5000) < lr_at(schedule, 4999));
  double prev = lr_at(schedule, 0);
  for (long long step = 0; step <= 50000; step += 617) {
    const double lr = lr_at(schedule, step);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("lr schedule validates its inputs") {
  LrSchedule schedule;
  CHECK_THROWS_AS(lr_at(schedule, -1), ContractError);
  schedule.decay_factor = 0.0;
  CHECK_THROWS_AS(lr_at(schedule, 0), ContractError);
  schedule.decay_factor = 1.5;
  CHECK_THROWS_AS(lr_at(schedule, 0), ContractError);
  schedule = LrSchedule{};
  schedule.decay_every = 0;
  CHECK_THROWS_AS(lr_at(schedule, 0), ContractError);
}
