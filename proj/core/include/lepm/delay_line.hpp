#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace lepm {

using Step = std::int64_t;

/// A received sample. `pre_history` is set when the requested source step
/// lies before the first push or has already been overwritten.
struct Received {
    double value = 0.0;
    bool pre_history = false;
};

/// Fixed-capacity ring buffer carrying one sender's signal stream.
///
/// Writes are strictly sequential in absolute step index. A value pushed at
/// step t is readable unchanged for reads at steps t' with
/// t <= t' < t + capacity. Several consumers may read the same line, each
/// with its own delay.
class DelayLine {
public:
    struct ReadRecord {
        Step at;
        Step source;
    };

    explicit DelayLine(std::size_t capacity, double fill_value = 0.0, Step first_step = 0);

    /// Throws ContractError unless step == latest_step() + 1.
    void push(Step step, double value);

    /// Value sent at (step - delay). Throws CapacityError if delay >= capacity
    /// and ContractError if the source step has not been pushed yet.
    Received read(Step step, Step delay) const;

    /// Value sent at an absolute step, with the same fill semantics as read().
    Received at(Step source) const;

    std::size_t capacity() const noexcept { return buffer_.size(); }
    Step latest_step() const noexcept { return latest_; }
    double fill_value() const noexcept { return fill_; }

    /// Records (read step, source step) for every read() while enabled.
    void enable_read_log(bool on);
    const std::vector<ReadRecord>& read_log() const noexcept { return log_; }

private:
    std::vector<double> buffer_;
    double fill_;
    Step first_;
    Step latest_;
    bool logging_ = false;
    mutable std::vector<ReadRecord> log_;
};

/// Exponential moving average: out = alpha * raw + (1 - alpha) * previous.
/// alpha = 1 passes the input through untouched.
class Smoother {
public:
    explicit Smoother(double alpha = 1.0);

    double update(double raw);
    void reset() noexcept { state_.reset(); }

    double alpha() const noexcept { return alpha_; }
    std::optional<double> state() const noexcept { return state_; }

private:
    double alpha_;
    std::optional<double> state_;
};

}  // namespace lepm
