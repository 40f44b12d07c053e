#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace prefab::kernels {

/// Which implementation of a data-parallel kernel to run. The serial versions
/// are the reference; the OpenMP versions must produce bit-identical results.
enum class Exec { Serial, Parallel };

/// Computes one item's loss and writes its gradient into `grad` (pre-zeroed,
/// length n_params). Must be safe to call concurrently for distinct items.
using ItemGradFn = std::function<double(std::size_t item, std::span<double> grad)>;

/// Sum of item losses; `grad` receives the sum of item gradients, accumulated
/// in item order so both variants perform the same floating-point additions.
double accumulate_gradients(Exec exec, std::size_t n_items, std::size_t n_params, const ItemGradFn& item_fn,
                            std::span<double> grad);

namespace serial {
double accumulate_gradients(std::size_t n_items, std::size_t n_params, const ItemGradFn& item_fn,
                            std::span<double> grad);
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);
}  // namespace serial

namespace parallel {
double accumulate_gradients(std::size_t n_items, std::size_t n_params, const ItemGradFn& item_fn,
                            std::span<double> grad);
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);
}  // namespace parallel

/// Runs fn(k) for k in [0, n); fn must only write state owned by index k.
void for_each_index(Exec exec, std::size_t n, const std::function<void(std::size_t)>& fn);

int max_threads();

}  // namespace prefab::kernels
