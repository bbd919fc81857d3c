#include <string>
#include <vector>

#include "meanfix/cli.hpp"

int main(int argc, char** argv) {
  return meanfix::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
