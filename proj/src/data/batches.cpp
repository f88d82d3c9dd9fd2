#include "vads/data/batches.hpp"

#include <utility>

#include "vads/core/errors.hpp"

namespace vads::data {

Batch gather_batch(const DatasetBundle& bundle, const std::vector<std::size_t>& ids) {
  Batch b;
  b.sample_ids = ids;
  b.features = bundle.rows(ids);
  b.labels = bundle.labels_of(ids);
  b.prototypes.resize(static_cast<Eigen::Index>(ids.size()), bundle.prototypes.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    b.prototypes.row(static_cast<Eigen::Index>(i)) = bundle.prototypes.row(b.labels[i]);
  }
  return b;
}

BatchStream::BatchStream(const DatasetBundle& bundle, std::size_t batch_size, Rng rng)
    : bundle_(&bundle), batch_size_(batch_size), rng_(std::move(rng)) {
  if (bundle.split.train_seen.empty()) throw ValidationError("batches: train_seen split is empty");
  if (batch_size == 0 || batch_size > bundle.split.train_seen.size()) {
    throw ValidationError("batches: batch size " + std::to_string(batch_size) + " must lie in [1, " +
                          std::to_string(bundle.split.train_seen.size()) + "]");
  }
  order_ = bundle.split.train_seen;
}

std::vector<Batch> BatchStream::next_epoch() {
  order_ = bundle_->split.train_seen;
  shuffle(order_, rng_);
  std::vector<Batch> out;
  const std::size_t n_batches = order_.size() / batch_size_;
  out.reserve(n_batches);
  for (std::size_t k = 0; k < n_batches; ++k) {
    std::vector<std::size_t> ids(order_.begin() + static_cast<std::ptrdiff_t>(k * batch_size_),
                                 order_.begin() + static_cast<std::ptrdiff_t>((k + 1) * batch_size_));
    out.push_back(gather_batch(*bundle_, ids));
  }
  return out;
}

}  // namespace vads::data
