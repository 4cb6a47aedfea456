#include <string>
#include <vector>

#include "slamacc/cli.hpp"

int main(int argc, char** argv) {
  return slamacc::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
