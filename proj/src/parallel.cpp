#include "dspec/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dspec {

int default_jobs()
{
    if (const char* env = std::getenv("DSPEC_JOBS")) {
        int j = std::atoi(env);
        if (j > 0)
            return j;
    }
    return 1;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& body)
{
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    int first_index = n;
    std::mutex m;
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                // keep the error of the lowest index so failures are reproducible
                std::lock_guard<std::mutex> lock(m);
                if (i < first_index) {
                    first_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    int nt = std::min(jobs, n);
    for (int t = 0; t < nt; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

}  // namespace dspec
