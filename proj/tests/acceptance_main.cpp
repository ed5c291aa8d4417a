// Acceptance suite: one pass/fail line per criterion with claim, expected
// value, measured value, and tolerance. Exits nonzero on any failure.
#include <cstdio>
#include <cstring>
#include <string>

#include "sptforge/acceptance.hpp"

int main(int argc, char** argv) {
  sptforge::AcceptanceOptions opts;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      opts.seed = std::stoull(argv[++i]);
    } else if (std::strcmp(argv[i], "--work-dir") == 0 && i + 1 < argc) {
      opts.work_dir = argv[++i];
    } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      std::string list = argv[++i];
      std::size_t pos = 0;
      while (pos < list.size()) {
        std::size_t comma = list.find(',', pos);
        if (comma == std::string::npos) comma = list.size();
        opts.only.push_back(std::stoi(list.substr(pos, comma - pos)));
        pos = comma + 1;
      }
    } else {
      std::fprintf(stderr,
                   "usage: %s [--seed N] [--work-dir DIR] [--only 1,2,...]\n",
                   argv[0]);
      return 2;
    }
  }

  const auto results = sptforge::run_acceptance(opts);
  sptforge::print_acceptance(results);
  return sptforge::acceptance_exit_code(results);
}
