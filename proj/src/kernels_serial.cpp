#include "prefab/kernels.hpp"

#include <algorithm>

namespace prefab::kernels::serial {

double accumulate_gradients(std::size_t n_items, std::size_t n_params, const ItemGradFn& item_fn,
                            std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> item_grad(n_params);
    double loss = 0.0;
    for (std::size_t k = 0; k < n_items; ++k) {
        std::fill(item_grad.begin(), item_grad.end(), 0.0);
        loss += item_fn(k, item_grad);
        for (std::size_t p = 0; p < n_params; ++p) grad[p] += item_grad[p];
    }
    return loss;
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
}

}  // namespace prefab::kernels::serial
