#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "lepm/errors.hpp"
#include "lepm/random.hpp"

namespace lepm {

/// Bounded FIFO store with uniform with-replacement sampling.
template <typename T>
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw ContractError("ReplayBuffer capacity must be positive");
        items_.reserve(capacity);
    }

    void push(T item) {
        if (items_.size() < capacity_) {
            items_.push_back(std::move(item));
        } else {
            items_[cursor_] = std::move(item);
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    /// Empty result when the buffer holds nothing.
    std::vector<T> sample(std::size_t batch, Rng& rng) const {
        std::vector<T> out;
        if (items_.empty()) return out;
        out.reserve(batch);
        std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
        for (std::size_t i = 0; i < batch; ++i) out.push_back(items_[pick(rng)]);
        return out;
    }

    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    bool empty() const noexcept { return items_.empty(); }
    const std::vector<T>& contents() const noexcept { return items_; }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<T> items_;
};

}  // namespace lepm
