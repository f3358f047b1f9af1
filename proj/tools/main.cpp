#include <vector>

#include "kernelcurves/cli.hpp"

int main(int argc, char** argv) {
  return kernelcurves::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
