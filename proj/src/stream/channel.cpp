#include "tpcs/stream/channel.hpp"

#include <algorithm>
#include <numeric>

#include "tpcs/point_cloud.hpp"

namespace tpcs::stream {

SimulatedLink::SimulatedLink(ChannelModel model) : model_(model)
{
  if (!(model_.bandwidth_bps > 0.0)) throw InvalidInput("simulated link: bandwidth must be > 0");
}

double SimulatedLink::send(double send_ms, std::size_t bytes)
{
  const double start = std::max(send_ms, busy_until_ms_);
  busy_until_ms_ = start + static_cast<double>(bytes) * 8.0 / model_.bandwidth_bps * 1000.0;
  return busy_until_ms_ + model_.propagation_delay_ms;
}

double simulate_transport(std::size_t bytes, const ChannelModel& channel, double send_ms)
{
  SimulatedLink link(channel);
  return link.send(send_ms, bytes);
}

std::vector<double> schedule_parallel(const std::vector<double>& jobs_ms, int lanes)
{
  std::vector<std::size_t> order(jobs_ms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return jobs_ms[a] > jobs_ms[b]; });
  std::vector<double> lane_free(static_cast<std::size_t>(std::max(lanes, 1)), 0.0);
  std::vector<double> finish(jobs_ms.size(), 0.0);
  for (std::size_t j : order) {
    auto lane = std::min_element(lane_free.begin(), lane_free.end());
    *lane += jobs_ms[j];
    finish[j] = *lane;
  }
  return finish;
}

double parallel_makespan(const std::vector<double>& jobs_ms, int lanes)
{
  auto finish = schedule_parallel(jobs_ms, lanes);
  return finish.empty() ? 0.0 : *std::max_element(finish.begin(), finish.end());
}

}  // namespace tpcs::stream
