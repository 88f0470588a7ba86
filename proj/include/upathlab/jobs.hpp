#ifndef UPATHLAB_JOBS_HPP
#define UPATHLAB_JOBS_HPP

#include <functional>

namespace upathlab {

// Runs f(0..n-1) on up to `jobs` worker threads. Workers share no mutable
// state; f must be safe to call concurrently for distinct indices.
void parallel_for(int jobs, int n, const std::function<void(int)>& f);

// --jobs default: UPATHLAB_JOBS env var, else hardware concurrency.
int default_jobs();

}  // namespace upathlab

#endif
