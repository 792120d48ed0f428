#pragma once

#include <cstddef>
#include <vector>

#include "tpcs/stream/config.hpp"

namespace tpcs::stream {

// One direction of a connection. Messages serialize onto the link in send
// order, so a message cannot overtake an earlier one.
class SimulatedLink {
 public:
  explicit SimulatedLink(ChannelModel model);

  // Returns the delivery time of `bytes` handed to the link at `send_ms`.
  // Calls must be made in non-decreasing `send_ms`.
  double send(double send_ms, std::size_t bytes);

  double busy_until_ms() const { return busy_until_ms_; }
  const ChannelModel& model() const { return model_; }

 private:
  ChannelModel model_;
  double busy_until_ms_ = 0.0;
};

// Delivery time of a single message on an idle link.
double simulate_transport(std::size_t bytes, const ChannelModel& channel, double send_ms);

// Finish times of `jobs_ms` list-scheduled longest-first onto `lanes`
// workers, reported in the input order.
std::vector<double> schedule_parallel(const std::vector<double>& jobs_ms, int lanes);
double parallel_makespan(const std::vector<double>& jobs_ms, int lanes);

}  // namespace tpcs::stream
