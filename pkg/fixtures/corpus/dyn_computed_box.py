import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
w, h = img.size
box = (w // 4, h // 4, w // 2, h // 2)
out = img.crop(box)
