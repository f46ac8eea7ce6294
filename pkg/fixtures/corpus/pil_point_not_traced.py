import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
gray = img.convert("L")
bw = gray.point(lambda p: 255 if p > 128 else 0)
