#include "ecbm/oracle.hpp"

namespace ecbm {

CbmTrainResult retrain_after_edit(const Dataset& d, const EditRequest& r, const CbmSpec& spec,
                                  const TrainConfig& config) {
  validate(r, d, spec.link);
  return train_cbm(apply_request(d, r), spec, config);
}

}  // namespace ecbm
