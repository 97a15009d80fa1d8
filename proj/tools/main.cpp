#include <string>
#include <vector>

#include "fshap/cli.hpp"
#include "fshap/memtrack.hpp"

int main(int argc, char** argv) {
  fshap::memtrack::link();  // pull in the allocation-tracking overrides
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return fshap::cli::run(args);
}
