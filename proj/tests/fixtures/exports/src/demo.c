#include <stdint.h>
#include <stddef.h>

static void helper(const uint8_t *data, size_t size) {
  if (size > 4) {
    return;
  }
}

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
  if (size > 0 && data[0] == 'A') {
    helper(data, size);
  }
  return 0;
}
