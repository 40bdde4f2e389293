#pragma once

#include "iqra/core.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace iqra {

/// Weighted least-squares fit constrained nonincreasing in index order, by
/// pooling adjacent violators. Weights must be positive.
inline std::vector<double> antitonic_regression(std::span<const double> y, std::span<const double> w) {
    if (y.size() != w.size()) throw DataError("values and weights differ in length");
    struct Block {
        double weight;
        double sum;  // weighted sum of values
        std::size_t count;
    };
    std::vector<Block> stack;
    stack.reserve(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(w[i] > 0.0)) throw DataError("antitonic regression weights must be positive");
        stack.push_back({w[i], w[i] * y[i], 1});
        // A block whose mean exceeds its left neighbour's violates the ordering.
        while (stack.size() > 1) {
            const Block& right = stack.back();
            const Block& left = stack[stack.size() - 2];
            if (right.sum * left.weight <= left.sum * right.weight) break;
            const Block merged{left.weight + right.weight, left.sum + right.sum, left.count + right.count};
            stack.pop_back();
            stack.back() = merged;
        }
    }
    std::vector<double> fit;
    fit.reserve(y.size());
    for (const auto& b : stack) fit.insert(fit.end(), b.count, b.sum / b.weight);
    return fit;
}

}  // namespace iqra
