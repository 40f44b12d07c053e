#include <omp.h>

#include <algorithm>
#include <cstdint>

#include "prefab/kernels.hpp"

namespace prefab::kernels {

namespace parallel {

double accumulate_gradients(std::size_t n_items, std::size_t n_params, const ItemGradFn& item_fn,
                            std::span<double> grad) {
    // One gradient row per item, reduced afterwards in item order: the result
    // does not depend on thread count or scheduling.
    std::vector<double> rows(n_items * n_params, 0.0);
    std::vector<double> losses(n_items, 0.0);
    const auto n = static_cast<std::int64_t>(n_items);
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) {
        const auto item = static_cast<std::size_t>(k);
        losses[item] = item_fn(item, std::span<double>(rows.data() + item * n_params, n_params));
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t k = 0; k < n_items; ++k) {
        loss += losses[k];
        const double* row = rows.data() + k * n_params;
        for (std::size_t p = 0; p < n_params; ++p) grad[p] += row[p];
    }
    return loss;
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t k = 0; k < count; ++k) fn(static_cast<std::size_t>(k));
}

}  // namespace parallel

double accumulate_gradients(Exec exec, std::size_t n_items, std::size_t n_params, const ItemGradFn& item_fn,
                            std::span<double> grad) {
    return exec == Exec::Serial ? serial::accumulate_gradients(n_items, n_params, item_fn, grad)
                                : parallel::accumulate_gradients(n_items, n_params, item_fn, grad);
}

void for_each_index(Exec exec, std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (exec == Exec::Serial)
        serial::for_each_index(n, fn);
    else
        parallel::for_each_index(n, fn);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace prefab::kernels
