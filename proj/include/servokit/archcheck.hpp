#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "servokit/csvio.hpp"
#include "servokit/errors.hpp"

namespace servokit {

enum class LayerKind { conv2d, pool2d, flatten, dense };
enum class PoolMode { avg, max };

/// One layer of the regression network. Conv layers are 3x3 stride-1
/// same-padding, pools 2x2 stride-2 (the VGG conventions).
struct LayerSpec {
  LayerKind kind = LayerKind::conv2d;
  std::string name;
  int filters = 0;  ///< conv output channels, or dense units
  int kernel_h = 3, kernel_w = 3;
  int stride_h = 1, stride_w = 1;
  PoolMode pool_mode = PoolMode::avg;
};

/// [height, width, channels] for feature maps, [length, 1] after flatten.
struct ShapeTensor {
  std::vector<int> dims;

  bool operator==(const ShapeTensor& other) const { return dims == other.dims; }
};

inline std::string shape_to_string(const ShapeTensor& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.dims.size(); ++i) {
    if (i) out += ',';
    out += format_int(s.dims[i]);
  }
  return out + "]";
}

inline ShapeTensor propagate_shape(const LayerSpec& layer,
                                   const ShapeTensor& input) {
  switch (layer.kind) {
    case LayerKind::conv2d: {
      if (input.dims.size() != 3)
        throw ContractError("conv2d needs a rank-3 input");
      if (layer.stride_h != 1 || layer.stride_w != 1)
        throw ContractError("conv2d supports stride 1 only");
      return {{input.dims[0], input.dims[1], layer.filters}};
    }
    case LayerKind::pool2d: {
      if (input.dims.size() != 3)
        throw ContractError("pool2d needs a rank-3 input");
      if (input.dims[0] < layer.stride_h || input.dims[1] < layer.stride_w)
        throw ContractError("pool2d input smaller than its stride");
      return {{input.dims[0] / layer.stride_h, input.dims[1] / layer.stride_w,
               input.dims[2]}};
    }
    case LayerKind::flatten: {
      if (input.dims.size() != 3)
        throw ContractError("flatten needs a rank-3 input");
      return {{input.dims[0] * input.dims[1] * input.dims[2], 1}};
    }
    default: {
      if (input.dims.size() != 2 || input.dims[1] != 1)
        throw ContractError("dense needs a flattened [n,1] input");
      return {{layer.filters, 1}};
    }
  }
}

/// Trainable parameters the layer would hold given its input shape.
inline long long layer_param_count(const LayerSpec& layer,
                                   const ShapeTensor& input) {
  switch (layer.kind) {
    case LayerKind::conv2d:
      return (static_cast<long long>(layer.kernel_h) * layer.kernel_w *
                  input.dims[2] +
              1) *
             layer.filters;
    case LayerKind::dense:
      return (static_cast<long long>(input.dims[0]) + 1) * layer.filters;
    default:
      return 0;
  }
}

inline const ShapeTensor kNetworkInput{{180, 320, 3}};

/**
 * VGG-19 feature stack (conv blocks of 2,2,4,4,4 at 64..512 filters, a pool
 * after each block) with the classifier head replaced by a single dense
 * layer regressing the 8 corner coordinates. Pooling defaults to average;
 * `pool_mode` toggles every pooling layer at once.
 */
inline std::vector<LayerSpec> build_modified_vgg19(
    PoolMode pool_mode = PoolMode::avg) {
  const int block_convs[5] = {2, 2, 4, 4, 4};
  const int block_filters[5] = {64, 128, 256, 512, 512};
  std::vector<LayerSpec> layers;
  for (int b = 0; b < 5; ++b) {
    for (int c = 0; c < block_convs[b]; ++c) {
      LayerSpec conv;
      conv.kind = LayerKind::conv2d;
      conv.name = "block" + std::to_string(b + 1) + "_conv" + std::to_string(c + 1);
      conv.filters = block_filters[b];
      layers.push_back(conv);
    }
    LayerSpec pool;
    pool.kind = LayerKind::pool2d;
    pool.name = "block" + std::to_string(b + 1) + "_pool";
    pool.kernel_h = pool.kernel_w = 2;
    pool.stride_h = pool.stride_w = 2;
    pool.pool_mode = pool_mode;
    layers.push_back(pool);
  }
  LayerSpec flat;
  flat.kind = LayerKind::flatten;
  flat.name = "flatten";
  layers.push_back(flat);
  LayerSpec dense;
  dense.kind = LayerKind::dense;
  dense.name = "dense";
  dense.filters = 8;
  layers.push_back(dense);
  return layers;
}

/// Expected (input, output) shape per layer, as published for the modified
/// network: 16 conv + 5 pool + flatten + dense rows from input [180,320,3].
struct ExpectedRow {
  ShapeTensor input;
  ShapeTensor output;
};

inline std::vector<ExpectedRow> expected_shape_table() {
  const auto row = [](std::vector<int> in, std::vector<int> out) {
    return ExpectedRow{{std::move(in)}, {std::move(out)}};
  };
  return {
      row({180, 320, 3}, {180, 320, 64}),
      row({180, 320, 64}, {180, 320, 64}),
      row({180, 320, 64}, {90, 160, 64}),
      row({90, 160, 64}, {90, 160, 128}),
      row({90, 160, 128}, {90, 160, 128}),
      row({90, 160, 128}, {45, 80, 128}),
      row({45, 80, 128}, {45, 80, 256}),
      row({45, 80, 256}, {45, 80, 256}),
      row({45, 80, 256}, {45, 80, 256}),
      row({45, 80, 256}, {45, 80, 256}),
      row({45, 80, 256}, {22, 40, 256}),
      row({22, 40, 256}, {22, 40, 512}),
      row({22, 40, 512}, {22, 40, 512}),
      row({22, 40, 512}, {22, 40, 512}),
      row({22, 40, 512}, {22, 40, 512}),
      row({22, 40, 512}, {11, 20, 512}),
      row({11, 20, 512}, {11, 20, 512}),
      row({11, 20, 512}, {11, 20, 512}),
      row({11, 20, 512}, {11, 20, 512}),
      row({11, 20, 512}, {11, 20, 512}),
      row({11, 20, 512}, {5, 10, 512}),
      row({5, 10, 512}, {25600, 1}),
      row({25600, 1}, {8, 1}),
  };
}

struct VerifyRow {
  std::string name;
  LayerKind kind = LayerKind::conv2d;
  ShapeTensor input;
  ShapeTensor output;
  long long params = 0;
  bool matches = true;
};

struct VerifyReport {
  bool ok = true;
  int first_mismatch = -1;  ///< layer index, -1 when everything matches
  std::string message = "all layer shapes match";
  long long dense_head_params = 0;
  long long frozen_base_params = 0;
  std::vector<VerifyRow> rows;
};

/// Propagate the architecture and compare each layer's (input, output)
/// against the expected table. Mismatches are report content, not errors.
inline VerifyReport verify_table(const std::vector<LayerSpec>& arch,
                                 const std::vector<ExpectedRow>& expected,
                                 const ShapeTensor& input = kNetworkInput) {
  VerifyReport report;
  ShapeTensor shape = input;
  for (std::size_t i = 0; i < arch.size(); ++i) {
    VerifyRow row;
    row.name = arch[i].name;
    row.kind = arch[i].kind;
    row.input = shape;
    row.params = layer_param_count(arch[i], shape);
    row.output = propagate_shape(arch[i], shape);
    if (arch[i].kind == LayerKind::dense)
      report.dense_head_params += row.params;
    else
      report.frozen_base_params += row.params;
    if (i < expected.size())
      row.matches = row.input == expected[i].input && row.output == expected[i].output;
    else
      row.matches = false;
    if (!row.matches && report.first_mismatch < 0) {
      report.first_mismatch = static_cast<int>(i);
      report.ok = false;
      report.message = "mismatch at layer " + std::to_string(i) + " (" +
                       row.name + "): got " + shape_to_string(row.input) +
                       " -> " + shape_to_string(row.output);
    }
    shape = row.output;
    report.rows.push_back(std::move(row));
  }
  if (expected.size() != arch.size() && report.ok) {
    report.ok = false;
    report.first_mismatch = static_cast<int>(arch.size());
    report.message = "expected table has " + std::to_string(expected.size()) +
                     " rows, architecture has " + std::to_string(arch.size());
  }
  return report;
}

inline std::string kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::pool2d: return "pool2d";
    case LayerKind::flatten: return "flatten";
    default: return "dense";
  }
}

/// Architecture as CSV for external training harnesses.
inline std::string arch_to_csv(const std::vector<LayerSpec>& arch,
                               const ShapeTensor& input = kNetworkInput) {
  std::string out = "index,name,kind,out_shape,params\n";
  ShapeTensor shape = input;
  for (std::size_t i = 0; i < arch.size(); ++i) {
    const long long params = layer_param_count(arch[i], shape);
    shape = propagate_shape(arch[i], shape);
    out += format_int(static_cast<long long>(i));
    out += ',';
    out += arch[i].name;
    out += ',';
    out += kind_name(arch[i].kind);
    out += ',';
    out += shape_to_string(shape);
    out += ',';
    out += format_int(params);
    out += '\n';
  }
  return out;
}

/// Step-decay learning rate: initial * decay_factor^floor(step/decay_every).
struct LrSchedule {
  double initial = 1e-5;
  double decay_factor = 0.95;
  long long decay_every = 2500;
};

inline double lr_at(const LrSchedule& schedule, long long step) {
  if (step < 0) throw ContractError("lr_at: step must be >= 0");
  if (!(schedule.decay_factor > 0.0) || schedule.decay_factor > 1.0 ||
      schedule.decay_every < 1)
    throw ContractError("lr schedule requires 0 < decay_factor <= 1, decay_every >= 1");
  const long long applications = step / schedule.decay_every;
  return schedule.initial *
         std::pow(schedule.decay_factor, static_cast<double>(applications));
}

}  // namespace servokit
