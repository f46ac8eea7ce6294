import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
size = (320, 240)
out = img.resize(size)
