// Times the max-discrepancy statistic: threaded evaluation-point loop vs the
// serial reference, on buffers sized like a large monitoring deployment.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "catedrift/detector.hpp"
#include "catedrift/rng.hpp"

using namespace catedrift;

namespace {

std::vector<TimeBatch> make_buffer(int n_batches, int n_rows, int d) {
  SplitRng rng{12345};
  std::vector<TimeBatch> buffer(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    buffer[b].t = b + 1;
    for (int i = 0; i < n_rows; ++i) {
      Observation row;
      row.t = b + 1;
      row.subject = i + 1;
      row.y = rng.next_normal();
      for (int k = 0; k < d; ++k) row.x.push_back(rng.next_uniform());
      row.z = rng.next_bernoulli(0.5);
      buffer[b].rows.push_back(row);
    }
  }
  return buffer;
}

double time_seconds(Detector& detector, bool parallel, int repeats, double& checksum) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  for (int r = 0; r < repeats; ++r) {
    const auto stat = parallel ? detector.statistic() : detector.statistic_serial();
    checksum += stat.value;
  }
  return std::chrono::duration<double>(Clock::now() - start).count() / repeats;
}

}  // namespace

int main(int argc, char** argv) {
  int n_rows = argc > 1 ? std::atoi(argv[1]) : 200;
  int repeats = argc > 2 ? std::atoi(argv[2]) : 3;

#ifdef _OPENMP
  std::printf("openmp: %d thread(s)\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled at build time\n");
#endif
  std::printf("%8s %6s %4s %12s %12s %8s\n", "batches", "rows", "d", "parallel(s)", "serial(s)",
              "speedup");

  for (int d : {1, 3}) {
    for (int w : {3, 6}) {
      DetectorConfig config;
      config.w = w;
      config.h = 0.5;
      config.epsilon = 1e18;
      config.propensity = PropensityModel::constant(0.5);
      Detector detector(config);
      const auto buffer = make_buffer(2 * w, n_rows, d);
      for (const auto& batch : buffer) detector.push(batch);

      double checksum = 0.0;
      const double tp = time_seconds(detector, true, repeats, checksum);
      const double ts = time_seconds(detector, false, repeats, checksum);
      std::printf("%8d %6d %4d %12.4f %12.4f %7.2fx\n", 2 * w, n_rows, d, tp, ts, ts / tp);

      // agreement guard: both paths must produce the same value
      if (detector.statistic().value != detector.statistic_serial().value) {
        std::printf("MISMATCH between parallel and serial statistic\n");
        return 1;
      }
      (void)checksum;
    }
  }
  return 0;
}
