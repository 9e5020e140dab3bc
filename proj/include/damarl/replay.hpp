#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "damarl/common.hpp"

namespace damarl {

// One environment step as seen by the learners: everything is stored in the
// delay-augmented observation space; variants that ignore the pending-action
// part slice it off at batch-assembly time.
struct Transition {
  std::vector<Eigen::VectorXd> obs;       // augmented observation per agent
  std::vector<Eigen::VectorXd> actions;   // chosen (not executed) action per agent
  std::vector<double> rewards;            // per agent
  std::vector<Eigen::VectorXd> next_obs;  // augmented next observation per agent
  bool done = false;                      // terminal: drop the bootstrap term
};

// Fixed-capacity ring buffer with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay buffer: capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return data_.size(); }

  void add(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  // i-th stored transition, oldest first.
  const Transition& at(std::size_t i) const {
    if (i >= data_.size()) throw SizeError("replay buffer: index out of range");
    return data_[(head_ + i) % data_.size()];
  }

  // Uniform sample of `batch` transitions (with replacement).
  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const {
    if (batch == 0) throw ConfigError("replay buffer: batch must be positive");
    if (data_.size() < batch)
      throw NotReadyError("replay buffer: " + std::to_string(data_.size()) +
                          " transitions stored, batch needs " +
                          std::to_string(batch));
    std::vector<const Transition*> out(batch);
    for (std::size_t i = 0; i < batch; ++i)
      out[i] = &data_[rng.uniform_index(data_.size())];
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest element once the buffer has wrapped
  std::vector<Transition> data_;
};

}  // namespace damarl
