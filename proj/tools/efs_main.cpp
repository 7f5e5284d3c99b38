#include <iostream>
#include <string>
#include <vector>

#include "efs/cli.hpp"
#include "efs/parallel.hpp"

int main(int argc, char** argv) {
  efs::apply_thread_env();
  std::vector<std::string> args(argv + 1, argv + argc);
  return efs::cli::dispatch(args, std::cout, std::cerr);
}
