#include <cstdio>

int main() {
  std::puts("workbench: commands not wired up yet");
  return 0;
}
