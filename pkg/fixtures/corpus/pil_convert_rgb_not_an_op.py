import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
rgb = img.convert("RGB")
print(rgb.mode)
