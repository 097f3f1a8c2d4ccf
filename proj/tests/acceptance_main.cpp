#include <cstdlib>
#include <iostream>
#include <string>

#include "modlab/acceptance.hpp"

int main(int argc, char** argv) {
  modlab::AcceptanceOptions opt;
  opt.log = &std::cerr;
  if (const char* w = std::getenv("MODLAB_WORKERS")) opt.workers = static_cast<unsigned>(std::max(1, std::atoi(w)));
  for (int i = 1; i < argc; ++i) opt.only.push_back(std::atoi(argv[i]));
  auto results = modlab::run_acceptance(opt);
  bool all = true;
  for (const auto& r : results) {
    std::cout << "criterion " << r.id << " " << (r.passed ? "PASS" : "FAIL") << " " << r.name << ": " << r.detail
              << std::endl;
    all = all && r.passed;
  }
  return all ? 0 : 1;
}
