#pragma once

#include "corrgan/gan/model.hpp"

namespace corrgan::gan::detail {

LossGradient evaluate(const GanModel& model, const LossSpec& spec, Mode g_mode, Eigen::VectorXd& generator_state);

}  // namespace corrgan::gan::detail
