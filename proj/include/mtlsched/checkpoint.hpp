#pragma once

#include <string>

#include "mtlsched/model.hpp"
#include "mtlsched/scheduler_net.hpp"

namespace mtlsched {

// Checkpoints are a JSON shape descriptor next to a flat little-endian
// float64 parameter file.

void save_model_checkpoint(const MtlModel& model, const std::string& meta_path,
                           const std::string& params_path);
MtlModel load_model_checkpoint(const std::string& meta_path, const std::string& params_path);

void save_scheduler_checkpoint(const SchedulerNet& net, const std::string& meta_path,
                               const std::string& params_path);
SchedulerNet load_scheduler_checkpoint(const std::string& meta_path,
                                       const std::string& params_path);

}  // namespace mtlsched
