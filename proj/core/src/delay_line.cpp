#include "lepm/delay_line.hpp"

#include <string>

#include "lepm/errors.hpp"

namespace lepm {

DelayLine::DelayLine(std::size_t capacity, double fill_value, Step first_step)
    : buffer_(capacity, fill_value), fill_(fill_value), first_(first_step), latest_(first_step - 1) {
    if (capacity == 0) throw ContractError("DelayLine capacity must be positive");
}

void DelayLine::push(Step step, double value) {
    if (step != latest_ + 1) {
        throw ContractError("DelayLine::push: expected step " + std::to_string(latest_ + 1) +
                            ", got " + std::to_string(step));
    }
    const auto cap = static_cast<Step>(buffer_.size());
    buffer_[static_cast<std::size_t>(((step % cap) + cap) % cap)] = value;
    latest_ = step;
}

Received DelayLine::read(Step step, Step delay) const {
    if (delay < 0) throw ContractError("DelayLine::read: negative delay");
    if (delay >= static_cast<Step>(buffer_.size())) {
        throw CapacityError("DelayLine::read: delay " + std::to_string(delay) +
                            " exceeds capacity " + std::to_string(buffer_.size()));
    }
    if (logging_) log_.push_back({step, step - delay});
    return at(step - delay);
}

Received DelayLine::at(Step source) const {
    if (source > latest_) {
        throw ContractError("DelayLine: step " + std::to_string(source) + " not yet pushed (latest " +
                            std::to_string(latest_) + ")");
    }
    const auto cap = static_cast<Step>(buffer_.size());
    if (source < first_ || source <= latest_ - cap) return {fill_, true};
    return {buffer_[static_cast<std::size_t>(((source % cap) + cap) % cap)], false};
}

void DelayLine::enable_read_log(bool on) {
    logging_ = on;
    if (!on) log_.clear();
}

Smoother::Smoother(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ContractError("Smoother alpha must lie in (0, 1]");
}

double Smoother::update(double raw) {
    if (!state_ || alpha_ == 1.0) {
        state_ = raw;
    } else {
        state_ = alpha_ * raw + (1.0 - alpha_) * *state_;
    }
    return *state_;
}

}  // namespace lepm
