import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
a = img.crop((0, 0, 40, 40))
b = img.crop((40, 40, 90, 90))
