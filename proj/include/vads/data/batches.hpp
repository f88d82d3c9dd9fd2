#pragma once

#include <cstddef>
#include <vector>

#include "vads/core/dataset.hpp"
#include "vads/core/rng.hpp"

namespace vads::data {

struct Batch {
  MatrixF features;          // n x d_v
  std::vector<int> labels;   // n
  MatrixF prototypes;        // n x d_a, prototypes[labels]
  std::vector<std::size_t> sample_ids;
};

/// Shuffled passes over train_seen; the trailing short batch is dropped.
class BatchStream {
 public:
  BatchStream(const DatasetBundle& bundle, std::size_t batch_size, Rng rng);

  std::size_t batches_per_epoch() const { return order_.size() / batch_size_; }

  /// Reshuffles and returns every full batch of the next epoch.
  std::vector<Batch> next_epoch();

 private:
  const DatasetBundle* bundle_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::size_t> order_;
};

Batch gather_batch(const DatasetBundle& bundle, const std::vector<std::size_t>& ids);

}  // namespace vads::data
